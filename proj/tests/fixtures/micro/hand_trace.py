#!/usr/bin/env python3
"""Exact hand-trace of the micro scripts in this directory.

Replays each *.script with rational arithmetic and writes the matching
*.expect file: per-job placement, spill start, TTL release, the ACT
trajectory of the adaptive policy and the spillover share at each probe.
It shares no code with the C++ simulator.

    python3 hand_trace.py          # rewrite every .expect
    python3 hand_trace.py --check  # fail if any .expect is stale
"""

import sys
from fractions import Fraction as F
from pathlib import Path

IOPS = 100  # HDD ops/s that make one TCIO unit
INF = None


def parse(path):
    sections = [("", "", {})]
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            kind, name = line[1:-1].split(None, 1)
            sections.append((kind, name.strip(), {}))
        else:
            k, v = line.split("=", 1)
            sections[-1][2][k.strip()] = v.strip()
    return sections


def num(s):
    return F(s)


class Job:
    def __init__(self, name, kv):
        self.id = name
        self.a = num(kv["arrival"])
        self.e = num(kv["end"])
        self.s = num(kv["size"])
        self.w = num(kv.get("write_phase", "1"))
        self.rate = F(int(kv["read_ops"])) / ((self.e - self.a) * IOPS)
        self.category = int(kv["category"]) if "category" in kv else None
        self.mu = num(kv["mu"]) if "mu" in kv else None
        self.sigma = num(kv.get("sigma", "0"))
        # outcome
        self.device = "hdd"
        self.t_s = None
        self.evicted = None
        self.pts = []  # (time, bytes, slope) SSD residency

    def tcio(self, t):
        return self.rate * (min(t, self.e) - self.a)

    def footprint(self, model, t):
        if model == "constant":
            return self.s
        g = self.w * (self.e - self.a)
        return self.s * min(F(1), (t - self.a) / g)

    def ssd_at(self, t):
        v = F(0)
        for (pt, b, sl) in self.pts:
            if pt <= t:
                v = b + sl * (t - pt)
        return v

    def ssd_before(self, t):
        v = F(0)
        for (pt, b, sl) in self.pts:
            if pt < t:
                v = b + sl * (t - pt)
        return v


def spill_tcio(j, t, model):
    if j.device != "ssd" or j.t_s is None or t <= j.t_s or t <= j.a:
        return F(0)
    at = min(t, j.e)
    if j.evicted is not None and j.evicted < at:
        at = j.evicted
    fp = j.footprint(model, at)
    if j.evicted is not None and j.evicted <= at:
        ssd = j.ssd_before(at)
    else:
        ssd = j.ssd_at(at)
    frac = min(F(1), max(F(0), 1 - ssd / fp)) if fp > 0 else F(1)
    return frac * (t - j.t_s) / (t - j.a) * j.tcio(t)


def spillover(jobs, t, window, model, placed):
    num_, den = F(0), F(0)
    for j in jobs:
        if not (t - window < j.a <= t) or j.id not in placed:
            continue
        if j.device != "ssd":
            continue
        num_ += spill_tcio(j, t, model)
        den += j.tcio(t)
    return F(0) if den == 0 else min(F(1), num_ / den)


def simulate(path):
    secs = parse(path)
    g = secs[0][2]
    policy = g["policy"]
    quota = F(g["quota"]) if g.get("quota", "inf") != "inf" else INF
    model = g.get("footprint", "constant")
    n_cat = int(g.get("categories", "2"))
    lo, hi = (F(x.strip()) for x in g.get("act_range", "0.01, 0.15").split(","))
    tw = F(g.get("tw", "900"))
    tl = F(g.get("tl", "900"))
    ttl = F(g.get("ttl", "3600"))
    jobs = sorted((Job(n, kv) for k, n, kv in secs if k == "job"), key=lambda j: (j.a, j.id))
    probes = [(n, F(kv["time"]), F(kv["window"])) for k, n, kv in secs if k == "probe"]

    # state per active SSD job: [growing, rate, grow_end, frozen]
    active = {}
    placed = set()
    act, last, act_log = 1, F(0), []
    now = F(0)

    def resident(j, t):
        st = active[j.id]
        if not st[0]:
            return st[3]
        return min(st[1] * (min(t, st[2]) - j.a), j.s)

    def used_and_rate(t):
        u, r = F(0), F(0)
        for j in jobs:
            if j.id in active:
                u += resident(j, t)
                st = active[j.id]
                if st[0] and t < st[2]:
                    r += st[1]
        return u, r

    # pending timed events: (time, order, job)
    events = []
    arrivals = list(jobs)
    while True:
        t_arr = arrivals[0].a if arrivals else None
        t_evt = min(events)[0] if events else None
        cands = [x for x in (t_arr, t_evt) if x is not None]
        t_next = min(cands) if cands else None
        u, r = used_and_rate(now)
        t_fill = None
        if r > 0 and quota is not None:
            t_fill = now + max(F(0), quota - u) / r
        if t_next is None and t_fill is None:
            break
        if t_fill is not None and (t_next is None or t_fill <= t_next):
            now = t_fill
            for j in jobs:
                st = active.get(j.id)
                if st and st[0] and now < st[2]:
                    st[3] = resident(j, now)
                    st[0] = False
                    j.t_s = now
                    j.pts = [p for p in j.pts if p[0] < now] + [(now, st[3], F(0))]
            continue
        now = t_next
        if t_arr is not None and (t_evt is None or t_arr <= t_evt):
            j = arrivals.pop(0)
            u, _ = used_and_rate(now)
            free = max(F(0), quota - u) if quota is not None else None
            if policy == "always-ssd":
                dev, evict = "ssd", None
            elif policy == "always-hdd":
                dev, evict = "hdd", None
            elif policy == "firstfit":
                dev, evict = ("ssd" if free is None or j.s <= free else "hdd"), None
            elif policy == "lifetime":
                h = j.mu + j.sigma
                dev, evict = ("ssd", j.a + h) if h < ttl else ("hdd", None)
            elif policy == "adaptive":
                if now >= last + tl:
                    h = spillover(jobs, now, tw, model, placed)
                    if h < lo:
                        act = max(1, act - 1)
                    if h > hi:
                        act = min(n_cat - 1, act + 1)
                    last = now
                    act_log.append((now, act))
                dev, evict = ("ssd" if j.category >= act else "hdd"), None
            else:
                raise SystemExit("unknown policy " + policy)
            j.device = dev
            placed.add(j.id)
            events.append((j.e, 3, j.id))
            if dev != "ssd":
                continue
            if evict is not None and evict < j.e:
                events.append((evict, 2, j.id))
            if model == "constant":
                alloc = j.s if free is None else min(j.s, free)
                if alloc < j.s:
                    j.t_s = j.a
                j.pts = [(j.a, alloc, F(0))]
                if alloc > 0:
                    active[j.id] = [False, F(0), j.a, alloc]
            else:
                grow = j.w * (j.e - j.a)
                if free is not None and free <= 0:
                    j.t_s = j.a
                    j.pts = [(j.a, F(0), F(0))]
                    continue
                rate = j.s / grow
                active[j.id] = [True, rate, j.a + grow, F(0)]
                j.pts = [(j.a, F(0), rate)]
                if j.a + grow < j.e:
                    j.pts.append((j.a + grow, j.s, F(0)))
                    events.append((j.a + grow, 1, j.id))
        else:
            ev = min(events)
            events.remove(ev)
            _, kind, jid = ev
            j = next(x for x in jobs if x.id == jid)
            st = active.get(jid)
            if kind == 1 and st and st[0]:
                st[0], st[3] = False, j.s
            elif kind == 2 and st:
                del active[jid]
                j.evicted = now
                j.pts = [p for p in j.pts if p[0] < now] + [(now, F(0), F(0))]
            elif kind == 3 and st:
                del active[jid]

    out = {"jobs": jobs, "act": act_log, "probes": []}
    for name, t, w in probes:
        out["probes"].append((name, t, w, spillover(jobs, t, w, model, placed)))
    return out


def fmt(x):
    if x is None:
        return "none"
    return repr(float(x)) if x.denominator != 1 else str(x.numerator)


def render(path, res):
    lines = ["# generated by hand_trace.py from " + Path(path).name + "; do not edit", ""]
    for j in res["jobs"]:
        lines += ["[job %s]" % j.id, "device = " + j.device, "spill_start = " + fmt(j.t_s),
                  "evicted_at = " + fmt(j.evicted), ""]
    if res["act"]:
        lines += ["[act trajectory]",
                  "sequence = " + ", ".join(str(a) for _, a in res["act"]),
                  "times = " + ", ".join(fmt(t) for t, _ in res["act"]), ""]
    for name, t, w, v in res["probes"]:
        lines += ["# exact value %s" % v, "[spillover %s]" % name, "time = " + fmt(t), "window = " + fmt(w),
                  "value = " + fmt(v), ""]
    return "\n".join(lines)


def main():
    here = Path(__file__).resolve().parent
    check = "--check" in sys.argv
    stale = []
    for script in sorted(here.glob("*.script")):
        text = render(script, simulate(script))
        target = script.with_suffix(".expect")
        if check:
            if not target.exists() or target.read_text() != text:
                stale.append(target.name)
        else:
            target.write_text(text)
    if stale:
        print("stale: " + ", ".join(stale))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
