"""Write the bundled problem files under problems/."""
from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np

from linequiv.algebra import MatrixPolynomial as MP
from linequiv.blockfun import BlockOperatorFunction
from linequiv.instances import FOUR_STAGE_MASK, FourStage, ThreeColumn, planted_diagonal
from linequiv.serialize import Problem, problem_json, write_json

SEED = 43


def problems(seed: int = SEED) -> dict[str, dict]:
    rng = np.random.default_rng(seed)
    fs = FourStage.random(rng, 2, 2)
    tc = ThreeColumn.random(np.random.default_rng(seed + 1), 2)
    one = BlockOperatorFunction.from_polys([[MP.from_coeffs([np.array([[c]]) for c in (2.0, -3.0, 0.5, 1.0)])]])
    p = MP.from_coeffs([np.array([[1.0]]), np.array([[2.0]])])
    singular = BlockOperatorFunction.from_polys([[p, p], [p, p]])
    out = {
        "four_stage": Problem(fs.function(), description="product, Schur, reduction, block companion; dims 2,2"),
        "four_stage_singular_lead": Problem(fs.with_singular_N3().function(),
                                           description="as four_stage with a rank-one product lead"),
        "three_column": Problem(BlockOperatorFunction.from_polys(tc.grid()),
                             description="three-column reduction pattern, random fill"),
        "scalar_cubic": Problem(one, description="one cubic scalar polynomial"),
        "planted_roots": Problem(planted_diagonal([[1.0, -2.0], [0.5j], [3.0, -1.0 + 1j, 2.5]]),
                                 description="diagonal with known roots"),
        "singular_grid": Problem(singular, description="determinant vanishes identically"),
    }
    return {k: problem_json(v) for k, v in out.items()}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "problems"))
    ap.add_argument("--seed", type=int, default=SEED)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, d in problems(args.seed).items():
        write_json(str(out / f"{name}.json"), d)
        print(f"wrote {out / name}.json")
    (out / "four_stage_mask.json").write_text(json.dumps(FOUR_STAGE_MASK.tolist()) + "\n")
    print(f"wrote {out / 'four_stage_mask.json'}")


if __name__ == "__main__":
    main()
