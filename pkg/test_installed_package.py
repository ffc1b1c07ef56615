#!/usr/bin/env python
"""Test the installed LevyStop package."""

import math

# Import from the installed package (not from the source tree)
from levystop import __version__, catalog, create_solver


def test_package():
    """Test the installed package functionality."""
    print("=== 测试已安装的 LevyStop 包 ===\n")

    stopping = create_solver(catalog()["bm"], q=0.5, seed=1, language="zh")

    print(f"包版本: {__version__}")
    print(f"贴现率: {stopping.q}")
    print(f"语言: {stopping.language}")

    put = stopping.solve("mckean", strike=1.0)
    power = stopping.solve("ns", nu=2.0)
    russian = create_solver(catalog()["bm"], q=1.0).solve("ss")

    print("\n主要结果:")
    print(f"McKean 阈值: {put.threshold:.6f}")
    print(f"幂收益阈值: {power.threshold:.6f}")
    print(f"俄式期权阈值: {russian.threshold:.6f}")

    assert math.isclose(put.threshold, math.log(0.5), abs_tol=1e-9)
    assert math.isclose(power.threshold, 2.0, rel_tol=1e-6)
    assert math.isclose(russian.threshold, math.atanh(1 / math.sqrt(2)) / math.sqrt(2), rel_tol=1e-6)

    print("\n✅ 所有测试通过！包安装成功且功能正常。")
    return True


if __name__ == "__main__":
    test_package()
