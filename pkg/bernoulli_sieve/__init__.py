"""
bernoulli_sieve
~~~~~~~~~~~~~~~

伯努利筛（Bernoulli sieve）实验室核心包：
- ξ 分布族、矩与渐近分类（xi_models）
- 精确蒙特卡洛模拟与可复现随机流（sieve_sim / rng）
- 有限 n 精确递推（exact）
- 极限分布与归一化序列（limit_laws / normalization）
- 拟合优度检验（stats_harness）

入口脚本位于 scripts/sieve_lab.py。
"""

__version__ = "0.1.0"
