"""On-disk formats: delimited tables, flat binary operators, checkpoints.

All floating-point text uses %.17g so values round-trip exactly; binary
payloads are little-endian complex128, row-major.  Nothing written here
carries wall-clock state, so reruns of identical configurations produce
byte-identical files.
"""

import json
import numpy as np
import struct

from .errors import KerrcatError

CHECKPOINT_MAGIC = b"KCCKPT01"

FLOQUET_COLUMNS = ("K", "eps2_over_K", "delta_over_K", "dE_floquet_over_K",
                   "dE_effective_over_K", "unitarity_defect", "fidelity0",
                   "fidelity1", "n_unmatched")
CAT_COLUMNS = ("K", "N_ch", "gamma0", "dE_fgr_over_K", "A",
               "dE_semiclassical_over_K", "c0", "t_H_flag")
LOCALIZATION_COLUMNS = ("index", "ipn_eff", "ipn_floquet", "wehrl_eff",
                        "wehrl_floquet", "fidelity")
SECTION_COLUMNS = ("seed_id", "k", "x", "p", "escaped", "lyapunov")
SPECTRUM_COLUMNS = ("index", "energy", "parity")
BOUNDARY_COLUMNS = ("x", "p")
HUSIMI_COLUMNS = ("x", "p", "q_eff", "q_floquet")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def write_csv(path, columns, rows):
    """Write dict-rows under the given column order."""
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in columns) + "\n")


def read_csv(path):
    """Read a table written by write_csv; returns dict of float columns."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    data = np.atleast_1d(data)
    return {name: data[name] for name in data.dtype.names}


def write_json(path, doc):
    """Deterministic JSON: sorted keys, fixed indentation, trailing newline."""
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def save_operator(path, matrix):
    """Flat little-endian complex128, row-major, no header."""
    np.ascontiguousarray(matrix, dtype=np.complex128).astype("<c16").tofile(path)


def load_operator(path, dim):
    m = np.fromfile(path, dtype="<c16")
    if m.size != dim * dim:
        raise KerrcatError(
            f"operator file {path} holds {m.size} entries, expected {dim * dim}")
    return m.reshape(dim, dim).astype(np.complex128)


def save_checkpoint(path, matrix, tau, config_hash):
    """Propagator checkpoint: magic, dim, tau, config hash, then the matrix."""
    matrix = np.ascontiguousarray(matrix, dtype=np.complex128)
    dim = matrix.shape[0]
    try:
        hx = bytes.fromhex(config_hash)
    except ValueError as exc:
        raise KerrcatError("config_hash must be a 64-character hex digest") from exc
    if len(hx) != 32:
        raise KerrcatError("config_hash must be a 64-character hex digest")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<Qd", dim, tau))
        fh.write(hx)
        fh.write(matrix.astype("<c16").tobytes())


def load_checkpoint(path, expect_hash=None):
    """Returns (matrix, tau, config_hash); verifies magic and optional hash."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != CHECKPOINT_MAGIC:
            raise KerrcatError(f"{path} is not a propagator checkpoint")
        dim, tau = struct.unpack("<Qd", fh.read(16))
        config_hash = fh.read(32).hex()
        payload = fh.read()
    m = np.frombuffer(payload, dtype="<c16")
    if m.size != dim * dim:
        raise KerrcatError(f"checkpoint {path} payload is truncated")
    if expect_hash is not None and config_hash != expect_hash:
        raise KerrcatError(
            f"checkpoint {path} belongs to config {config_hash[:12]}..., "
            f"expected {expect_hash[:12]}...")
    return m.reshape(dim, dim).astype(np.complex128), tau, config_hash


def spectrum_rows(spectrum):
    return [{"index": i, "energy": float(spectrum.energies[i]),
             "parity": int(spectrum.parities[i])}
            for i in range(len(spectrum.energies))]


def section_rows(section):
    """Flatten a PoincareSection into seed_id/k/x/p/escaped/lyapunov rows."""
    rows = []
    for sid, pts in enumerate(section.points):
        esc = bool(section.escaped[sid])
        lyap = float(section.lyapunov[sid])
        for k in range(pts.shape[0]):
            rows.append({"seed_id": sid, "k": k, "x": float(pts[k, 0]),
                         "p": float(pts[k, 1]), "escaped": esc,
                         "lyapunov": lyap})
    return rows


def boundary_rows(geometry):
    return [{"x": float(x), "p": float(p)} for x, p in geometry.boundary]
