"""Plain-text model checkpoints.

A checkpoint stores the four weight matrices of a trained model behind
a dimension header:

    PRIVGRAPH-CKPT v1 <D> <H> <d> <C>
    w0 <D> <H>
    ... D rows of H space-separated decimals ...
    w1 <H> <d>
    wb <d> <d>
    wc <d> <C>

Values are written with 17 significant digits, which round-trips float64
bitwise. Optimizer moments are deliberately not persisted: a checkpoint
is an evaluation artifact, not a resume point.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .models import ClassifierParams, EncoderParams, PredictorParams

MAGIC = "PRIVGRAPH-CKPT"
VERSION = "v1"


class FormatError(ValueError):
    """A checkpoint file does not match the expected grammar."""


def _matrix_blocks(dims):
    d_in, h, d_out, c = dims
    return [("w0", d_in, h), ("w1", h, d_out), ("wb", d_out, d_out), ("wc", d_out, c)]


def save_checkpoint(path, state) -> None:
    """Write the encoder/link/classifier weights of a ModelState (or any
    object with .theta/.phi/.psi) to ``path``."""
    w0 = np.asarray(state.theta.w0, dtype=np.float64)
    w1 = np.asarray(state.theta.w1, dtype=np.float64)
    wb = np.asarray(state.phi.wb, dtype=np.float64)
    wc = np.asarray(state.psi.wc, dtype=np.float64)
    d_in, h = w0.shape
    d_out, c = wc.shape
    if w1.shape != (h, d_out) or wb.shape != (d_out, d_out):
        raise ValueError(f"inconsistent parameter shapes: {w0.shape} {w1.shape} "
                         f"{wb.shape} {wc.shape}")
    mats = {"w0": w0, "w1": w1, "wb": wb, "wc": wc}
    lines = [f"{MAGIC} {VERSION} {d_in} {h} {d_out} {c}"]
    for name, rows, cols in _matrix_blocks((d_in, h, d_out, c)):
        m = mats[name]
        lines.append(f"{name} {rows} {cols}")
        for row in m:
            lines.append(" ".join(f"{x:.17g}" for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_ints(parts, count, where):
    if len(parts) != count:
        raise FormatError(f"{where}: expected {count} fields, got {len(parts)}")
    try:
        return [int(x) for x in parts]
    except ValueError:
        raise FormatError(f"{where}: non-integer field in {parts!r}") from None


def load_checkpoint(path):
    """Parse a checkpoint back into (theta, phi, psi) parameter triples;
    every weight round-trips bitwise."""
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(str(p))
    lines = p.read_text().splitlines()
    if not lines:
        raise FormatError(f"{p}: empty file")
    head = lines[0].split()
    if len(head) != 6 or head[0] != MAGIC:
        raise FormatError(f"{p}:1: bad header {lines[0]!r}")
    if head[1] != VERSION:
        raise FormatError(f"{p}:1: unsupported version {head[1]!r}, expected {VERSION}")
    dims = _parse_ints(head[2:], 4, f"{p}:1")
    if min(dims) < 1:
        raise FormatError(f"{p}:1: dimensions must be positive, got {dims}")

    mats = {}
    lineno = 1
    for name, rows, cols in _matrix_blocks(dims):
        if lineno >= len(lines):
            raise FormatError(f"{p}: truncated before block {name!r}")
        parts = lines[lineno].split()
        if len(parts) != 3 or parts[0] != name:
            raise FormatError(f"{p}:{lineno + 1}: expected block header "
                              f"'{name} {rows} {cols}', got {lines[lineno]!r}")
        r, c = _parse_ints(parts[1:], 2, f"{p}:{lineno + 1}")
        if (r, c) != (rows, cols):
            raise FormatError(f"{p}:{lineno + 1}: block {name!r} is {r}x{c}, "
                              f"header dimensions require {rows}x{cols}")
        lineno += 1
        if lineno + rows > len(lines):
            raise FormatError(f"{p}: truncated inside block {name!r}")
        m = np.zeros((rows, cols))
        for i in range(rows):
            vals = lines[lineno + i].split()
            if len(vals) != cols:
                raise FormatError(f"{p}:{lineno + i + 1}: expected {cols} values, "
                                  f"got {len(vals)}")
            try:
                m[i] = [float(x) for x in vals]
            except ValueError:
                raise FormatError(f"{p}:{lineno + i + 1}: invalid decimal") from None
        mats[name] = m
        lineno += rows
    if lineno != len(lines):
        raise FormatError(f"{p}:{lineno + 1}: trailing content after last block")

    theta = EncoderParams(w0=mats["w0"], w1=mats["w1"])
    phi = PredictorParams(wb=mats["wb"])
    psi = ClassifierParams(wc=mats["wc"])
    return theta, phi, psi
