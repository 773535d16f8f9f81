"""Minimal external solver: ``python -m delprop.solve.highs_cli model.lp out.sol``.

Reads an LP file with HiGHS (the optional ``highspy`` package) and writes
``varname value`` lines preceded by a ``# status`` comment.
"""

from __future__ import annotations

import sys


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 2:
        print("usage: python -m delprop.solve.highs_cli MODEL.lp SOLUTION.sol", file=sys.stderr)
        return 2
    try:
        import highspy
    except ImportError:
        print("highspy is not installed (pip install 'artifact[highs]')", file=sys.stderr)
        return 3
    lp_path, sol_path = argv
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    if h.readModel(lp_path) != highspy.HighsStatus.kOk:
        print(f"cannot read {lp_path}", file=sys.stderr)
        return 3
    h.run()
    status = h.getModelStatus()
    with open(sol_path, "w", encoding="utf-8") as fh:
        if status == highspy.HighsModelStatus.kOptimal:
            fh.write("# status optimal\n")
            names = h.getLp().col_names_
            for name, value in zip(names, h.getSolution().col_value):
                fh.write(f"{name} {value:.12g}\n")
        elif status == highspy.HighsModelStatus.kInfeasible:
            fh.write("# status infeasible\n")
        else:
            fh.write(f"# status {h.modelStatusToString(status).replace(' ', '_').lower()}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
