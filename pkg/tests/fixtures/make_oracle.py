"""Regenerate the frozen oracle values for the van der Pol limit cycle.

Run from the repository root:  python tests/fixtures/make_oracle.py
The output goes to tests/fixtures/oracle.json; copy the numbers into
phaseplane.catalog.VANDERPOL_ORACLE if they ever change.
"""

import json
from pathlib import Path

from phaseplane import catalog
from phaseplane.oracle import steady_amplitude

X0, TOL, INTEG_TOL = 0.5, 1e-10, 1e-13


def main():
    out = {}
    for mu in (1.0, 0.1):
        A, T = steady_amplitude(catalog.get("vanderpol", {"mu": mu}), X0, tol=TOL,
                                integ_tol=INTEG_TOL)
        out[f"vanderpol_mu={mu:g}"] = {"mu": mu, "x0": X0, "tol": TOL, "integ_tol": INTEG_TOL,
                                      "A_star": A, "T_star": T}
    path = Path(__file__).with_name("oracle.json")
    path.write_text(json.dumps(out, indent=2) + "\n")
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
