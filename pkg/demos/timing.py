"""
Timing the pipeline on a VGA frame
==================================

A 640x480 frame holding a 45x45 board has 1936 interior corners. The
bench harness runs the whole pipeline repeatedly and checks that every
run returns the same corners.
"""

import os

from cmpcorner import PipelineConfig, SynthConfig, generate
from cmpcorner.evalbench import bench

image, truth = generate(SynthConfig(grid=45, cell_px=10, width=640, height=480, seed=1))
cfg = PipelineConfig(window=21)
cpus = len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count()
print(f"{len(truth)} corners, {cpus} CPU(s) available")

for threads in (1, 2, 4):
    report = bench(image, cfg, repetitions=20, threads=threads, warmup=3)
    print(f"threads={threads}: mean {report.mean_ms:6.2f} ms, median {report.median_ms:6.2f} ms, corners {report.corners}")
