#!/usr/bin/env python
"""Example usage of the LevyStop package."""

import math
import os
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from levystop import (
    Side,
    appell_root,
    build_appell_family,
    build_scale_table,
    catalog,
    create_solver,
    extrema_law,
    set_language,
)
from levystop.reports import solution_summary, verification_summary


def example_put():
    """Perpetual American put on a driftless Brownian motion."""
    print("=== McKean 看跌期权示例 ===\n")

    stopping = create_solver(catalog()["bm"], q=0.5, seed=11, n_paths=20_000)
    solution = stopping.solve("mckean", strike=1.0)

    print(solution_summary(solution))
    print(f"阈值 y* = {solution.threshold:.6f} (log 1/2 = {math.log(0.5):.6f})")

    xs = np.linspace(-2.0, 2.0, 9)
    print(solution.value_grid(xs).to_string(index=False))
    print()
    return solution


def example_power():
    """Power and exponential payoffs on a jump-diffusion."""
    print("=== Novikov-Shiryaev 示例 ===\n")

    jd = catalog()["jump_diffusion"]
    stopping = create_solver(jd, q=0.5, seed=5)

    for nu in (1.0, 1.5, 2.0):
        solution = stopping.solve("ns", nu=nu)
        print(f"nu = {nu}: a(nu) = {solution.threshold:.4f}, V(0) = {solution.value(0.0):.4f}")

    exp_solution = stopping.solve("ns-exp")
    print(f"指数收益: x* = {exp_solution.threshold:.4f}\n")


def example_russian():
    """Russian option for the spectrally negative catalogue models."""
    print("=== Shepp-Shiryaev 俄式期权示例 ===\n")

    models = catalog()
    for name, q in (("bm", 1.0), ("sn_cl", 1.0), ("bv_sn", 1.75)):
        solution = create_solver(models[name], q=q).solve("ss")
        print(f"{name:>6}: x* = {solution.threshold:.6f}, V(0) = {solution.value(0.0):.6f}")

    table = build_scale_table(models["sn_cl"], 1.0)
    print(f"\nW(1) = {table.W(1.0):.6f}, Z(1) = {table.Z(1.0):.6f} ({table.repr.value})\n")


def example_appell():
    """Appell roots from an empirical supremum law."""
    print("=== Appell 函数示例 ===\n")

    jd = catalog()["jump_diffusion"]
    law = extrema_law(jd, 0.5, Side.SUPREMUM, n_samples=50_000, seed=3)
    print(f"样本数: {law.n_samples}, E[M] = {law.moment(1):.4f}")

    fam = build_appell_family(law, 2.5, jd)
    for nu in (1.0, 2.0, 2.5):
        sub = build_appell_family(law, nu, jd)
        print(f"a({nu}) = {appell_root(sub):.4f}")
    print(f"Q_2(1) = {fam(2.0, 1.0):.4f}\n")


def example_verification():
    """Monte Carlo check of the put threshold, and a negative control."""
    print("=== 蒙特卡洛验证示例 ===\n")

    stopping = create_solver(catalog()["bm"], q=0.5, seed=12, n_paths=4_000)
    stopping.dt = 2e-3

    report = stopping.verify("mckean", strike=1.0)
    print(verification_summary(report))

    control = stopping.verify("mckean", strike=1.0, offset=0.6)
    print(f"\n负对照 (offset = 0.6): 区间包含候选阈值 = {control.in_interval}\n")


def example_languages():
    """The same summary in both supported languages."""
    solution = create_solver(catalog()["bm"], q=1.0).solve("ss")
    for language in ("en", "zh"):
        set_language(language)
        print(solution_summary(solution))
        print()
    set_language("en")


if __name__ == "__main__":
    example_put()
    example_power()
    example_russian()
    example_appell()
    example_verification()
    example_languages()
