#!/usr/bin/env python3
"""Spreadsheet-style recomputation of the unit-rate job, term by term.

Every rate is 1 (so hdd_iops_capacity = 1 too). The job runs 100 s, holds
10 bytes, reads 450 bytes in 1 op with no cache hits and writes 50 bytes
in 1 op. Writes `unit_rate.expect` next to this file.
"""

from fractions import Fraction as F
from pathlib import Path

duration = F(100)
size = F(10)
read_ops, cache_hit = F(1), F(0)
read_bytes, write_bytes = F(450), F(50)
chunk = F(1024 * 1024)
iops = F(1)

disk_writes = -(-write_bytes // chunk)  # ceil
tcio_rate = (read_ops * (1 - cache_hit) + disk_writes) / (duration * iops)
throughput = (read_bytes + write_bytes) / duration

rows = {
    "tcio_hdd_rate": tcio_rate,
    "io_throughput": throughput,
    "hdd_byte": 1 * size * duration,
    "hdd_network": 1 * throughput * duration,
    "hdd_server": 1 * tcio_rate * duration,
    "hdd_specific": 1 * tcio_rate * duration,
    "ssd_byte": 1 * size * duration,
    "ssd_network": 1 * throughput * duration,
    "ssd_server": 1 * throughput,
    "ssd_specific": 1 * write_bytes,
}
rows["hdd_total"] = rows["hdd_byte"] + rows["hdd_network"] + rows["hdd_server"] + rows["hdd_specific"]
rows["ssd_total"] = rows["ssd_byte"] + rows["ssd_network"] + rows["ssd_server"] + rows["ssd_specific"]
rows["savings"] = rows["hdd_total"] - rows["ssd_total"]

out = ["# generated by unit_rate.py; do not edit"]
out += ["%s = %s" % (k, float(v)) for k, v in rows.items()]
Path(__file__).with_name("unit_rate.expect").write_text("\n".join(out) + "\n")
