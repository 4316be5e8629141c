import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

# 统一项目输出目录
OUTPUT_DIR = Path(os.getenv("SIEVE_OUTPUT_DIR", "data"))

# 并行与随机数
DEFAULT_WORKERS = int(os.getenv("SIEVE_WORKERS", "1"))
DEFAULT_SEED = int(os.getenv("SIEVE_SEED", "20090701"))
CHUNK_SIZE = 256

# 高精度交替和：起始精度与上限（bits）
BASE_PRECISION_BITS = 256
MAX_PRECISION_BITS = int(os.getenv("SIEVE_MAX_PRECISION_BITS", "1024"))

# 数值积分
QUAD_RTOL = 1e-10
QUAD_ATOL = 1e-300
QUAD_LIMIT = 200
# 自定义分位数模型的递减表按行积分，逐项绝对误差
DECREMENT_QUAD_TOL = 1e-12

# 矩数组默认长度，按需增长
K_MAX_DEFAULT = 4096

# 截断容差
PMF_TOL = 1e-12
MASS_TOL = 1e-9

# 模拟
UNDERSHOOT_K_CAP = 64
FULL_SIM_MAX_N = 10**9
FAST_SIM_MAX_N = 10**15

# 统计检验
KS_ALPHA = 1e-3
