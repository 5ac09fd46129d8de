"""robust-da - 稳健数据同化库 (L2 / L1 / Huber 范数的 3D-Var、4D-Var 与 EnSRF)"""

__version__ = "0.1.0"
__author__ = "Robust DA Team"
__description__ = "基于 ADMM 与半二次优化的稳健数据同化, 以 Lorenz-96 孪生实验验证"
