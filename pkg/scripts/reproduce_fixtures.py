#!/usr/bin/env python3
"""
Recompute every published fixture at 50 digits with mpmath, then with the library.
Exits 1 if a reference misses its published value or the library drifts from the
reference by more than 1e-9.
"""
import sys
from pathlib import Path

_BASE_DIR = Path(__file__).resolve().parent
sys.path.insert(0, str(_BASE_DIR.parent))

import mpmath as mp  # noqa: E402

from cli.suites import HIGH_PRECISION_AGREEMENT, LIBRARY_FIXTURES  # noqa: E402
from oracles.high_precision import reference_values  # noqa: E402


def main() -> int:
    failures = 0
    for name, reference, expected, tolerance in reference_values():
        library = LIBRARY_FIXTURES[name]()
        ok_reference = abs(float(reference) - expected) <= tolerance
        ok_library = abs(library - float(reference)) <= HIGH_PRECISION_AGREEMENT
        mark = "✅" if ok_reference and ok_library else "❌"
        print(f"{mark} {name:<28} {mp.nstr(reference, 20):>24}  library {library:.12g}  published {expected}")
        failures += not (ok_reference and ok_library)
    print(f"[INFO] {len(LIBRARY_FIXTURES) - failures}/{len(LIBRARY_FIXTURES)} fixtures reproduced")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
