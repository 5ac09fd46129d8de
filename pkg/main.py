#!/usr/bin/env python3
"""
Robust DA - 稳健资料同化
在 L1 与 Huber 范数下求解 3D-Var、4D-Var 与集合平方根滤波, 并以 Lorenz-96 孪生实验检验
"""

from src.ui.cli import create_app

def main():
    """启动命令行"""
    app = create_app()
    app()

if __name__ == "__main__":
    main()
