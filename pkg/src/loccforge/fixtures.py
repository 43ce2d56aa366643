"""Built-in example measurements, also shipped as JSON files.

Run `python -m loccforge.fixtures <dir>` to (re)write the JSON documents.
"""
from __future__ import annotations

import pathlib
import sys

import numpy as np

from .io import serialize_measurement
from .measurement import SeparableMeasurement, from_kraus, measurement_from_parts

I2 = np.eye(2)


def _proj(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def cascade5() -> SeparableMeasurement:
    """Five two-qubit product operators that need four alternating rounds."""
    a0 = 0.4 * _proj([1, 0])
    a1 = 0.4 * _proj([1, 1j])
    a2 = I2.copy()
    a3 = a0 + a1
    a4 = I2 - a3
    b_low = 0.3 * _proj([0, 1])
    b3 = np.diag([1.0, 0.4]).astype(complex)
    b4 = b_low + b3
    parts = [[a0, b_low], [a1, b_low], [a2, b_low], [a3, b3], [a4, b4]]
    return measurement_from_parts(parts, labels=[f"M{j+1}" for j in range(5)],
                                  party_names=["A", "B"])


def domino9() -> SeparableMeasurement:
    """The 3x3 domino basis: complete, orthogonal, and not locally measurable."""
    e = [np.zeros(3, dtype=complex) for _ in range(3)]
    for k in range(3):
        e[k][k] = 1.0
    plus = lambda i, j: e[i] + e[j]
    minus = lambda i, j: e[i] - e[j]
    states = [
        (e[1], e[1]),
        (e[0], plus(0, 1)), (e[0], minus(0, 1)),
        (e[2], plus(1, 2)), (e[2], minus(1, 2)),
        (plus(0, 1), e[2]), (minus(0, 1), e[2]),
        (plus(1, 2), e[0]), (minus(1, 2), e[0]),
    ]
    parts = [[_proj(a), _proj(b)] for a, b in states]
    return measurement_from_parts(parts, labels=[f"M{j+1}" for j in range(9)],
                                  party_names=["A", "B"])


def _fourparty(b0, b1) -> SeparableMeasurement:
    parts = [
        [_proj([1, 0]), b0, I2.copy(), I2.copy()],
        [_proj([0, 1]), b1, I2.copy(), I2.copy()],
    ]
    return measurement_from_parts(parts, labels=["M1", "M2"],
                                  party_names=["A", "B", "C", "D"])


def fourparty_mismatch() -> SeparableMeasurement:
    """Two four-party operators whose B parts disagree; not even complete."""
    return _fourparty(np.diag([1.0, 0.5]).astype(complex),
                      np.diag([0.5, 1.0]).astype(complex))


def fourparty_aligned() -> SeparableMeasurement:
    """Same shape with trivial B parts; a one-round protocol exists."""
    return _fourparty(I2.copy(), I2.copy())


def productbasis4() -> SeparableMeasurement:
    """The two-qubit computational product basis; either party may start."""
    parts = [[_proj([1, 0]) if a == 0 else _proj([0, 1]),
              _proj([1, 0]) if b == 0 else _proj([0, 1])]
             for a, b in [(0, 0), (0, 1), (1, 0), (1, 1)]]
    return measurement_from_parts(parts, labels=[f"M{j+1}" for j in range(4)],
                                  party_names=["A", "B"])


def singularpair3() -> SeparableMeasurement:
    """Three operators with a singular extreme pair; blocked by local cones."""
    pu = _proj([1, 0])
    pu_perp = _proj([0, 1])
    pw = _proj([1, 1])
    a, b = 0.5, 0.25
    parts = [
        [pu, I2 - a * pw],
        [pu_perp, I2 - b * pw],
        [a * pu + b * pu_perp, pw],
    ]
    return measurement_from_parts(parts, labels=["M1", "M2", "M3"],
                                  party_names=["A", "B"])


def krausdemo() -> SeparableMeasurement:
    """Three two-qubit operators where the first has a two-entry Kraus group,
    so lifting must recover a coin and nontrivial local unitaries."""
    p0 = _proj([1, 0])
    p1 = _proj([0, 1])
    ua = np.array([[0.6, -0.8], [0.8, 0.6]], dtype=complex)
    ub = np.array([[0.0, 1.0], [1j, 0.0]], dtype=complex)
    entries = [
        (p0, p0),
        (ua @ p0, ub @ p0),
        (p0, p1),
        (p1, I2.copy()),
    ]
    return from_kraus(entries, labels=["M1", "M2", "M3"],
                      party_names=["A", "B"])


ALL = {
    "cascade5": cascade5,
    "domino9": domino9,
    "fourparty_mismatch": fourparty_mismatch,
    "fourparty_aligned": fourparty_aligned,
    "productbasis4": productbasis4,
    "singularpair3": singularpair3,
    "krausdemo": krausdemo,
}

_NOTES = {
    "cascade5": "five operators, four alternating rounds",
    "domino9": "domino basis, no finite protocol",
    "fourparty_mismatch": "four parties, incompatible B parts",
    "fourparty_aligned": "four parties, single A measurement",
    "productbasis4": "computational product basis",
    "singularpair3": "singular extreme pair witness",
    "krausdemo": "duplicated Kraus entries with a unitary twist",
}


def write_all(directory) -> list:
    out = []
    d = pathlib.Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for name, build in ALL.items():
        path = d / f"{name}.json"
        path.write_text(serialize_measurement(build(), meta={"note": _NOTES[name]}))
        out.append(path)
    return out


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else "fixtures"
    for p in write_all(target):
        print(p)
