#!/usr/bin/env python
"""LevyStop 简单使用示例"""
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from levystop import Family, LevyModel, OptimalStopping


def main():
    """演示LevyStop的基本使用"""
    print("=== LevyStop 简化版使用示例 ===\n")

    # 1. 定义模型
    print("1. 定义模型...")
    model = LevyModel(Family.BROWNIAN_DRIFT, mu=0.0, sigma=1.0)
    print(f"   族: {model.family.value}, psi(1) = {model.psi(1.0):.4f}\n")

    # 2. 创建求解器
    print("2. 创建求解器...")
    stopping = OptimalStopping(model, q=0.5, seed=42, n_paths=10_000, language="zh")
    print(f"   贴现率: {stopping.q}, 路径数: {stopping.n_paths}\n")

    # 3. 求解
    print("3. 求解最优阈值...")
    put = stopping.solve("mckean", strike=1.0)
    power = stopping.solve("ns", nu=2.0)
    print(f"   McKean: y* = {put.threshold:.4f}, V(0) = {put.value(0.0):.4f}")
    print(f"   幂收益: a(2) = {power.threshold:.4f}, V(0) = {power.value(0.0):.4f}\n")

    # 4. 阈值扫描
    print("4. 阈值扫描...")
    levels = stopping.levels(power, width=0.7, points=15)
    sweep = stopping.sweep("ns", levels, nu=2.0)
    print(sweep.table.to_string(index=False))
    print(f"   最优阈值区间: [{sweep.interval[0]:.3f}, {sweep.interval[1]:.3f}]\n")

    print("=== 示例完成 ===")


if __name__ == "__main__":
    main()
