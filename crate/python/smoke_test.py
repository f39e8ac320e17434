"""Smoke test for the nt_desk_py extension: run from the repo root after building it."""

from fractions import Fraction
from pathlib import Path

import nt_desk_py as nt

DATA = Path(__file__).resolve().parent.parent / "data"


def load(name, cls=nt.Morphism):
    return cls.from_json((DATA / name).read_text())


def main():
    u0 = load("robert_u0_stage3.json")
    u3 = load("robert_u3_stage3.json")
    rep = nt.metric_dcu(u0, u3)
    dcu = Fraction(rep["quantities"][0]["value"])
    assert dcu <= Fraction(1, 8), dcu

    r = nt.robert(0, 3, stage=4)
    assert r["passed"], r["checks"]

    fd = nt.metric_frakd(load("exp_lattice.json"))
    assert any("not diagonalisable" in n for n in fd["notes"]), fd["notes"]

    u = load("novel_u_stage3.json", nt.Unitary)
    for y in ["0", "1/3", "1/2", "1"]:
        exact = u.det_at(y)
        num = u.numeric_det_at(y, steps=4000)
        assert abs(float(exact) - num) < 1e-9, (y, exact, num)

    p = u.pattern()
    assert nt.d_cu(p, p)["value"] == "0"
    assert sum(m for _, m in p.positions_at("1/2")) == p.total_mult

    try:
        nt.Morphism.from_json("{}")
    except ValueError:
        pass
    else:
        raise AssertionError("bad input accepted")

    print("ok: d_cu(u0, u3) =", dcu, "| rotation norm", fd["quantities"][0]["value"])


if __name__ == "__main__":
    main()
