#!/usr/bin/env python3
"""Adapter: solve a cosma LP file with scipy.optimize.milp (HiGHS).

usage: scipy_milp_solver.py MODEL.lp SOLUTION.sol
Writes "status <word>" followed by "name value" lines. Exit 0 when the
solution file was written.
"""
import os
import re
import sys

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import csr_matrix

TOKEN = re.compile(r"[+-]|[0-9]+(?:\.[0-9]*)?|[A-Za-z_][A-Za-z0-9_]*|<=|>=|=")


def parse_terms(tokens):
    """tokens -> list of (coef, name)."""
    terms, sign, coef = [], 1, None
    for tok in tokens:
        if tok == "+":
            sign = 1
        elif tok == "-":
            sign = -1
        elif tok[0].isdigit():
            coef = float(tok)
        else:
            terms.append((sign * (1.0 if coef is None else coef), tok))
            sign, coef = 1, None
    return terms


def read_lp(path):
    sections = {"minimize": [], "subject to": [], "bounds": [], "binary": [], "generals": []}
    current = None
    logical = []  # (section, text) with continuation lines joined
    with open(path) as f:
        for raw in f:
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("\\"):
                continue
            key = line.strip().lower()
            if key in sections or key == "end":
                current = key
                continue
            if line.startswith("   ") and logical and logical[-1][0] == current and current in ("minimize", "subject to"):
                logical[-1] = (current, logical[-1][1] + " " + line.strip())
            else:
                logical.append((current, line.strip()))
    for section, text in logical:
        sections[section].append(text)

    names, index = [], {}

    def var(name):
        if name not in index:
            index[name] = len(names)
            names.append(name)
        return index[name]

    objective = []
    for text in sections["minimize"]:
        body = text.split(":", 1)[1]
        objective += [(c, var(n)) for c, n in parse_terms(TOKEN.findall(body)) if n != "0"]
    rows = []
    for text in sections["subject to"]:
        body = text.split(":", 1)[1]
        toks = TOKEN.findall(body)
        rel_at = max(i for i, t in enumerate(toks) if t in ("<=", ">=", "="))
        rhs_toks = toks[rel_at + 1:]
        rhs = float("".join(rhs_toks))
        lhs = [(c, var(n)) for c, n in parse_terms(toks[:rel_at])]
        rows.append((lhs, toks[rel_at], rhs))
    lo, hi, integral = {}, {}, set()
    for text in sections["bounds"]:
        a, name, b = re.match(r"(-?[0-9.]+)\s*<=\s*(\S+)\s*<=\s*(-?[0-9.]+)", text).groups()
        lo[var(name)], hi[var(name)] = float(a), float(b)
    for text in sections["binary"]:
        v = var(text)
        lo[v], hi[v] = 0.0, 1.0
        integral.add(v)
    for text in sections["generals"]:
        integral.add(var(text))
    return names, objective, rows, lo, hi, integral


def main():
    lp_path, sol_path = sys.argv[1], sys.argv[2]
    names, objective, rows, lo, hi, integral = read_lp(lp_path)
    n = len(names)
    c = np.zeros(n)
    for coef, v in objective:
        c[v] += coef
    data, ri, ci, lb, ub = [], [], [], [], []
    for r, (lhs, rel, rhs) in enumerate(rows):
        for coef, v in lhs:
            data.append(coef)
            ri.append(r)
            ci.append(v)
        lb.append(-np.inf if rel == "<=" else rhs)
        ub.append(np.inf if rel == ">=" else rhs)
    constraints = []
    if rows:
        A = csr_matrix((data, (ri, ci)), shape=(len(rows), n))
        constraints.append(LinearConstraint(A, lb, ub))
    bounds = Bounds([lo.get(v, 0.0) for v in range(n)], [hi.get(v, np.inf) for v in range(n)])
    integrality = np.array([1 if v in integral else 0 for v in range(n)])
    options = {"mip_rel_gap": 0.0}
    limit = os.environ.get("COSMA_TIME_LIMIT")
    if limit:
        options["time_limit"] = float(limit)
    res = milp(c, constraints=constraints, integrality=integrality, bounds=bounds, options=options)
    with open(sol_path, "w") as out:
        if res.x is None:
            if res.status == 2:
                out.write("status infeasible\n")
                return 0
            sys.stderr.write(res.message + "\n")
            return 1
        out.write("status %s\n" % ("optimal" if res.status == 0 else "feasible"))
        for name, value in zip(names, res.x):
            r = round(value)
            if abs(value - r) < 1e-6:
                value = r
            if value != 0:
                out.write("%s %s\n" % (name, repr(value) if not float(value).is_integer() else int(value)))
    return 0


if __name__ == "__main__":
    sys.exit(main())
