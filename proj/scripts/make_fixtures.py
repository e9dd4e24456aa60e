#!/usr/bin/env python3
"""Writes the bundled scenario fixtures under fixtures/.

Topology, boundary data and compressor controls follow the published
network descriptions. Pipe lengths, diameters and friction coefficients are
not part of those descriptions; the values below are assumptions chosen so
that stationary exit pressures sit in the 43-63 bar operating window and the
energy functional is of order 0.1.
"""
import json
import os
import sys

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "fixtures")

GAS = {"R": 518.0, "T": 283.15, "z": 0.9, "rho0": 0.785}

H4, H6 = 4 * 3600.0, 6 * 3600.0


def ramp(a, b, t0, t1, horizon):
    """Constant a until t0, linear to b at t1, constant after."""
    return [[0.0, a], [t0, a], [t1, b], [horizon, b]]


def pipe(pid, frm, to, length, diameter, friction=0.01):
    return {"id": pid, "type": "pipe", "from": frm, "to": to,
            "length": length, "diameter": diameter, "friction": friction}


def gaslib11():
    T = 86400.0
    nodes = [{"id": s, "kind": "source"} for s in ("S1", "S2", "S3")]
    nodes += [{"id": e, "kind": "exit"} for e in ("E1", "E2", "E3")]
    nodes += [{"id": "N%d" % i, "kind": "junction"} for i in range(1, 10)]
    # (id, from, to, length [m], diameter [m]); P8/P9 are identical so the
    # exits E2 and E3 are interchangeable.
    pipes = [
        ("P1", "S1", "N1", 40000.0, 0.5),
        ("P2", "N2", "N3", 30000.0, 0.5),
        ("P3", "N9", "E1", 25000.0, 0.4),
        ("P4", "S2", "N4", 40000.0, 0.5),
        ("P5", "N5", "N6", 30000.0, 0.5),
        ("P6", "S3", "N9", 35000.0, 0.4),
        ("P7", "N6", "N7", 25000.0, 0.5),
        ("P8", "N7", "E2", 20000.0, 0.4),
        ("P9", "N7", "E3", 20000.0, 0.4),
        ("P10", "N8", "N6", 20000.0, 0.4),
        ("P11", "N3", "N9", 20000.0, 0.5),
    ]
    edges = [pipe(*p) for p in pipes]
    cf = 420.0
    edges.append({"id": "C1", "type": "compressor", "from": "N1", "to": "N2",
                  "jump": ramp(0.0, 5.0, H4, H6, T), "c_f": cf, "gamma": 1.4})
    edges.append({"id": "C2", "type": "compressor", "from": "N4", "to": "N5",
                  "jump": ramp(0.0, 15.0, H4, H6, T), "c_f": cf, "gamma": 1.4})
    edges.append({"id": "V1", "type": "valve", "from": "N3", "to": "N8",
                  "events": [[0.0, "open"], [4.5 * 3600.0, "closed"]]})
    schedules = [
        {"node": "S1", "quantity": "pressure", "breakpoints": ramp(70.0, 48.0, H4, H6, T)},
        {"node": "S2", "quantity": "pressure", "breakpoints": ramp(70.0, 54.0, H4, H6, T)},
        {"node": "S3", "quantity": "pressure", "breakpoints": ramp(65.0, 46.0, H4, H6, T)},
    ]
    for i, e in enumerate(("E1", "E2", "E3"), start=1):
        schedules.append({"node": e, "quantity": "flow",
                          "breakpoints": ramp(38.22, 25.48, H4, H6, T),
                          "uncertainty": {"coordinate": i, "map": "affine", "scale": 10.0,
                                          "ramp": [H4, H6]}})
    return {
        "name": "gaslib11",
        "gas": GAS,
        "nodes": nodes,
        "edges": edges,
        "schedules": schedules,
        "uncertainty": {"dimension": 3, "density": "uniform"},
        "qoi": {"alpha": 1e-10,
                "compressors": [{"id": c, "g0": 5000.0, "g1": 2.5, "g2": 0.0} for c in ("C1", "C2")]},
        "simulation": {"horizon": T, "slabs": 6, "dt0": 1800.0, "dx0": 1000.0, "initial_model": "M3"},
    }


def single_pipe(name, T=3600.0, flow=20.0, ramp_to=None, scale=None):
    flows = [[0.0, flow], [T, flow]] if ramp_to is None else [[0.0, flow], [T / 4, flow], [T / 2, ramp_to], [T, ramp_to]]
    sched_exit = {"node": "E", "quantity": "flow", "breakpoints": flows}
    if scale is not None:
        sched_exit["uncertainty"] = {"coordinate": 1, "map": "affine", "scale": scale}
    return {
        "name": name,
        "gas": GAS,
        "nodes": [{"id": "S", "kind": "source"}, {"id": "E", "kind": "exit"}],
        "edges": [pipe("P", "S", "E", 10000.0, 0.5)],
        "schedules": [{"node": "S", "quantity": "pressure", "breakpoints": [[0.0, 60.0], [T, 60.0]]}, sched_exit],
        "uncertainty": {"dimension": 1, "density": "uniform"},
        "qoi": {"alpha": 1.0, "compressors": []},
        "simulation": {"horizon": T, "slabs": 1, "dt0": 600.0, "dx0": 1000.0, "initial_model": "M3"},
    }


def pipe_compressor():
    """Compressor feeding one pipe; the exit flow ramps up mid-horizon."""
    T = 3600.0
    return {
        "name": "pipe_compressor",
        "gas": GAS,
        "nodes": [{"id": "S", "kind": "source"}, {"id": "A", "kind": "junction"}, {"id": "E", "kind": "exit"}],
        "edges": [
            {"id": "C", "type": "compressor", "from": "S", "to": "A", "jump": [[0.0, 5.0], [T, 5.0]], "c_f": 500.0, "gamma": 1.4},
            pipe("P", "A", "E", 20000.0, 0.5),
        ],
        "schedules": [
            {"node": "S", "quantity": "pressure", "breakpoints": [[0.0, 60.0], [T, 60.0]]},
            {"node": "E", "quantity": "flow", "breakpoints": [[0.0, 20.0], [600.0, 20.0], [2400.0, 40.0], [T, 40.0]]},
        ],
        "uncertainty": {"dimension": 1, "density": "uniform"},
        "qoi": {"alpha": 1e-10, "compressors": [{"id": "C", "g0": 5000.0, "g1": 2.5, "g2": 0.0}]},
        "simulation": {"horizon": T, "slabs": 1, "dt0": 600.0, "dx0": 1000.0, "initial_model": "M2"},
    }


def symmetric_two_exit():
    """Two identical exit branches behind one trunk; each exit flow has its own coordinate."""
    T = 6 * 3600.0
    ramp = [3600.0, 3 * 3600.0]
    def exit_sched(node, coord):
        return {"node": node, "quantity": "flow",
                "breakpoints": [[0.0, 10.0], [ramp[0], 10.0], [ramp[1], 15.0], [T, 15.0]],
                "uncertainty": {"coordinate": coord, "map": "affine", "scale": 3.0, "ramp": ramp}}
    return {
        "name": "symmetric_two_exit",
        "gas": GAS,
        "nodes": [{"id": "S", "kind": "source"}, {"id": "A", "kind": "junction"}, {"id": "J", "kind": "junction"},
                  {"id": "E1", "kind": "exit"}, {"id": "E2", "kind": "exit"}],
        "edges": [
            {"id": "C1", "type": "compressor", "from": "S", "to": "A",
             "jump": [[0.0, 0.0], [ramp[0], 0.0], [ramp[1], 5.0], [T, 5.0]], "c_f": 500.0, "gamma": 1.4},
            pipe("P0", "A", "J", 30000.0, 0.5),
            pipe("PA", "J", "E1", 15000.0, 0.4),
            pipe("PB", "J", "E2", 15000.0, 0.4),
        ],
        "schedules": [
            {"node": "S", "quantity": "pressure", "breakpoints": [[0.0, 55.0], [T, 55.0]]},
            exit_sched("E1", 1),
            exit_sched("E2", 2),
        ],
        "uncertainty": {"dimension": 2, "density": "uniform"},
        "qoi": {"alpha": 1e-9, "compressors": [{"id": "C1", "g0": 5000.0, "g1": 2.5, "g2": 0.0}]},
        "simulation": {"horizon": T, "slabs": 2, "dt0": 1800.0, "dx0": 2000.0, "initial_model": "M3"},
    }


def write(name, doc):
    path = os.path.join(OUT, name + ".json")
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")
    print("wrote", os.path.relpath(path))


if __name__ == "__main__":
    os.makedirs(OUT, exist_ok=True)
    write("gaslib11", gaslib11())
    write("single_pipe", single_pipe("single_pipe"))
    write("pipe_compressor", pipe_compressor())
    write("symmetric_two_exit", symmetric_two_exit())
    if "--only11" not in sys.argv:
        try:
            from gaslib40 import gaslib40
            write("gaslib40", gaslib40())
        except ImportError:
            pass
