"""Tau sweep over the small A/B table shipped in data/records_example.jsonl."""
from pathlib import Path

import numpy as np

from matchbench.bench import load_records
from matchbench.metrics import QualityTimeSeries, tau_sweep

DATA = Path(__file__).resolve().parent.parent / "data" / "records_example.jsonl"


def main():
    records = load_records(DATA)
    a = QualityTimeSeries.from_records(records, "A")
    b = QualityTimeSeries.from_records(records, "B")
    for tau, out in tau_sweep(a, b, np.round(np.arange(0.66, 0.77, 0.01), 2).tolist()):
        value = "UNREACHABLE" if not out.reachable else f"{out.value:.4f}"
        print(f"tau={tau:.2f}  S_norm={value}")


if __name__ == "__main__":
    main()
