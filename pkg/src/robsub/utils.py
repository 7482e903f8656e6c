import hashlib
import math
from typing import FrozenSet, Iterable, Tuple


def calculate_file_hash(file_name: str, block_size: int = 16384) -> str:
    """Calculates the SHA-256 digest of an instance file.

    The digest identifies the instance a result record was produced from.
    Files are read block-wise so large instance files do not have to fit in
    memory.

    Args:
        file_name (str): Path of the file to hash.
        block_size (int, optional): Size of the blocks read from the file in
            bytes. Defaults to 16384.

    Returns:
        str: The hexadecimal SHA-256 digest.

    Raises:
        FileNotFoundError: If the specified file is not found.
    """

    try:
        sha256_hash = hashlib.sha256()
        with open(file_name, "rb") as f:
            for block in iter(lambda: f.read(block_size), b""):
                sha256_hash.update(block)
        return sha256_hash.hexdigest()
    except FileNotFoundError as e:
        raise FileNotFoundError(f"File not found: {file_name}") from e


def as_set(elements: Iterable[int]) -> FrozenSet[int]:
    """Normalizes any iterable of element ids to a frozenset of ints."""
    return frozenset(int(j) for j in elements)


def sorted_tuple(elements: Iterable[int]) -> Tuple[int, ...]:
    return tuple(sorted(int(j) for j in elements))


def harmonic(m: float) -> float:
    """Harmonic number H(floor(m)), with H(0) = 0."""
    return math.fsum(1.0 / i for i in range(1, int(math.floor(m)) + 1))


def relaxed_copies(count: int, eps: float) -> int:
    """Number of budget copies ceil(ln(count / eps)), never below one."""
    return max(1, math.ceil(math.log(count / eps)))
