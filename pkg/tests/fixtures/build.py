"""Assemble every fixture .wat into the .wasm file next to it.

Run from anywhere: ``python3 tests/fixtures/build.py``. Needs wasmtime.
"""

from pathlib import Path

import wasmtime

HERE = Path(__file__).resolve().parent


def build() -> list[Path]:
    out = []
    for wat in sorted(HERE.rglob("*.wat")):
        target = wat.with_suffix(".wasm")
        data = wasmtime.wat2wasm(wat.read_text())
        if not target.exists() or target.read_bytes() != data:
            target.write_bytes(data)
        out.append(target)
    return out


if __name__ == "__main__":
    for p in build():
        print(p.relative_to(HERE))
