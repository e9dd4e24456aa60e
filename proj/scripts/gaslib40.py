"""40-pipe fixture: 3 sources, 6 compressors, 29 exits in 8 regions.

The published description gives the counts, the region membership of the
exits and the boundary/control data, but not the geometry. Assumed layout:
each source feeds the network through a compressor station; eight hub
junctions H1..H8 serve one exit region each through short exit pipes; eleven
trunk pipes connect the hubs with two loops (H2-H1-H3, H4-H5-H6).
"""

H2_, H6_ = 2 * 3600.0, 6 * 3600.0
T = 12 * 3600.0

REGIONS = {1: range(1, 2), 2: range(2, 12), 3: range(12, 14), 4: range(14, 19),
           5: range(19, 21), 6: range(21, 25), 7: range(25, 27), 8: range(27, 30)}
FLOW_A = {r: 5.5 for r in REGIONS}
FLOW_B = {1: 7.5, 2: 8.0, 3: 6.5, 4: 6.0, 5: 7.0, 6: 4.0, 7: 8.5, 8: 6.0}
SOURCES_A = {"S1": 60.0, "S2": 53.2, "S3": 53.2}
SOURCES_B = {"S1": 60.0, "S2": 58.0, "S3": 53.2}
JUMP_A = {"C1": 0.0, "C2": 0.0, "C3": 5.0, "C4": 0.0, "C5": 0.0, "C6": 0.0}
JUMP_B = {"C1": 5.0, "C2": 15.0, "C3": 7.0, "C4": 12.0, "C5": 5.0, "C6": 12.0}
C_F = 520.0


def ramp(a, b):
    return [[0.0, a], [H2_, a], [H6_, b], [T, b]]


def gaslib40():
    gas = {"R": 518.0, "T": 283.15, "z": 0.9, "rho0": 0.785}
    nodes = [{"id": s, "kind": "source"} for s in ("S1", "S2", "S3")]
    nodes += [{"id": "E%d" % i, "kind": "exit"} for i in range(1, 30)]
    junctions = ["A1", "A2", "A3", "B4", "B5", "B6"] + ["H%d" % i for i in range(1, 9)]
    nodes += [{"id": j, "kind": "junction"} for j in junctions]

    def pipe(pid, frm, to, length, diameter, friction=0.01):
        return {"id": pid, "type": "pipe", "from": frm, "to": to,
                "length": length, "diameter": diameter, "friction": friction}

    trunk = [
        ("T1", "A1", "H2", 60000.0, 0.7),
        ("T2", "A2", "H4", 50000.0, 0.6),
        ("T3", "A3", "H6", 55000.0, 0.6),
        ("T4", "H2", "H1", 25000.0, 0.5),
        ("T5", "H2", "H3", 30000.0, 0.5),
        ("T6", "H4", "H3", 35000.0, 0.4),
        ("T7", "B4", "H5", 30000.0, 0.5),
        ("T8", "B5", "H7", 40000.0, 0.5),
        ("T9", "H6", "H5", 60000.0, 0.3),
        ("T10", "B6", "H8", 35000.0, 0.5),
        ("T11", "H1", "H3", 20000.0, 0.4),
    ]
    edges = [pipe(*p) for p in trunk]
    # Exit pipes: lengths cycle through 4-12 km so meshes differ per pipe.
    for r, exits in REGIONS.items():
        for k, i in enumerate(exits):
            length = 4000.0 + 2000.0 * ((i * 3) % 5)
            edges.append(pipe("X%d" % i, "H%d" % r, "E%d" % i, length, 0.3))
    comps = [("C1", "S1", "A1"), ("C2", "S2", "A2"), ("C3", "S3", "A3"),
             ("C4", "H4", "B4"), ("C5", "H6", "B5"), ("C6", "H7", "B6")]
    for cid, frm, to in comps:
        edges.append({"id": cid, "type": "compressor", "from": frm, "to": to,
                      "jump": ramp(JUMP_A[cid], JUMP_B[cid]), "c_f": C_F, "gamma": 1.4})

    schedules = [{"node": s, "quantity": "pressure", "breakpoints": ramp(SOURCES_A[s], SOURCES_B[s])}
                 for s in ("S1", "S2", "S3")]
    for r, exits in REGIONS.items():
        for i in exits:
            schedules.append({"node": "E%d" % i, "quantity": "flow",
                              "breakpoints": ramp(FLOW_A[r], FLOW_B[r]),
                              "uncertainty": {"coordinate": r, "map": "multiplicative", "scale": 0.3,
                                              "ramp": [H2_, H6_]}})
    g = {"g0": 2629.0, "g1": 2.47428571429, "g2": 1.37142857143e-5}
    return {
        "name": "gaslib40",
        "gas": gas,
        "nodes": nodes,
        "edges": edges,
        "schedules": schedules,
        "uncertainty": {"dimension": 8, "density": "uniform"},
        "qoi": {"alpha": 1e-10, "compressors": [dict(id=c[0], **g) for c in comps]},
        "simulation": {"horizon": T, "slabs": 4, "dt0": 3600.0, "dx0": 2000.0, "initial_model": "M3"},
    }
