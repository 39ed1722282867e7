from pathlib import Path

import pytest
import wasmtime

from wasmsym.decoder import decode_module
from wasmsym.smt import default_solver

FIXTURES = Path(__file__).parent / "fixtures"
EOSIO_DIR = FIXTURES / "eosio"
ETH_DIR = FIXTURES / "ethereum"


def wat(text: str):
    """Assemble WebAssembly text and decode it."""
    return decode_module(wasmtime.wat2wasm(text))


def load(path) -> object:
    return decode_module(Path(path).read_bytes())


def fixture_files(directory: Path) -> list[Path]:
    return sorted(directory.glob("*.wasm"))


@pytest.fixture(scope="session")
def solver():
    return default_solver()
