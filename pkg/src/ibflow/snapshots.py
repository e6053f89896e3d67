"""Byte-deterministic snapshot files.

Layout: one JSON header line (sorted keys, newline-terminated) followed by
consecutive arrays in npy encoding, in a fixed order: u, v, p, fu, fv, one
marker array per platelet (ascending id), then one float64 link table with
columns (a_pid, a_idx, b_pid, b_idx, anchor_x, anchor_y, k_c, l0_c); pair
links carry -1/NaN in the unused columns.
"""

import json

import numpy as np
from numpy.lib import format as npformat


def _link_table(links):
    rows = np.empty((len(links), 8))
    for i, l in enumerate(links):
        if l.is_wall:
            rows[i] = [l.a_pid, l.a_idx, -1, -1, l.anchor[0], l.anchor[1], l.k_c, l.l0_c]
        else:
            rows[i] = [l.a_pid, l.a_idx, l.b_pid, l.b_idx, np.nan, np.nan, l.k_c, l.l0_c]
    return rows


def write_snapshot(path, sim, grid, method):
    plats = sorted(sim.platelets, key=lambda p: p.pid)
    header = {
        "step": sim.step,
        "time": sim.time,
        "nx": grid.nx,
        "ny": grid.ny,
        "Lx": grid.Lx,
        "Ly": grid.Ly,
        "method": method,
        "platelets": [{"pid": p.pid, "n": len(p.markers()), "activated": bool(p.activated)} for p in plats],
        "links": len(sim.links),
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        st = sim.fluid
        for arr in (st.u, st.v, st.p, st.fu, st.fv):
            npformat.write_array(fh, np.ascontiguousarray(arr), version=(1, 0))
        for p in plats:
            npformat.write_array(fh, np.ascontiguousarray(p.markers()), version=(1, 0))
        npformat.write_array(fh, _link_table(sim.links), version=(1, 0))


def read_snapshot(path):
    """Returns (header, fields dict, markers dict by pid, link table)."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        fields = {}
        for name in ("u", "v", "p", "fu", "fv"):
            fields[name] = npformat.read_array(fh)
        markers = {}
        for meta in header["platelets"]:
            markers[meta["pid"]] = npformat.read_array(fh)
        links = npformat.read_array(fh)
    return header, fields, markers, links
