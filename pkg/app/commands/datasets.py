"""
Dataset Export
==============
Writes the bundled Iris / Wine copies to CSV so the presets run offline.
"""

import sys

from app.data import export_builtin


def export_dataset(name: str, path: str) -> int:
    try:
        export_builtin(name, path)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"{name} written to {path}")
    return 0
