import os
from pathlib import Path

import numpy as np
from dotenv import load_dotenv

load_dotenv()

# Base paths
BASE_DIR = Path(__file__).resolve().parent.parent

DATA_DIR = Path(os.getenv("IBP_DATA_DIR", BASE_DIR / "data"))
MNIST_DIR = Path(os.getenv("IBP_MNIST_DIR", DATA_DIR / "mnist"))
OUTPUT_DIR = Path(os.getenv("IBP_OUTPUT_DIR", BASE_DIR / "runs"))
LOG_DIR = Path(os.getenv("IBP_LOG_DIR", BASE_DIR / "logs"))

# Logging
LOG_LEVEL = os.getenv("IBP_LOG_LEVEL", "INFO").upper()
LOG_TO_FILE = os.getenv("IBP_LOG_TO_FILE", "0").lower() in ("1", "true", "yes")

# Accepted train.dtype names
DTYPES = {"float32": np.float32, "float64": np.float64}

# Exact fixed-order matmul below this inner dimension, BLAS above
EXACT_MATMUL_MAX_INNER = 32

# Optimizer
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
LEARNING_RATE = 5e-4
LR_DECAY = 0.2
GRAD_CLIP_NORM = 10.0

# Total epochs -> (decay-1, decay-2)
LR_MILESTONES = {
    50: (40, 45),
    70: (50, 60),
    80: (60, 70),
    160: (120, 140),
}

# Warmup regularizers and schedules
TAU = 0.5
LAMBDA0 = 0.5
EPS_START_FACTOR = 1e-3
EPS_EXP_FRACTION = 0.25

# Batch normalization
BN_MOMENTUM = 0.1
BN_EPS = 1e-5

# Datasets
MNIST_MEAN = (0.1307,)
MNIST_STD = (0.3081,)
MNIST_NUM_CLASSES = 10
CLIP_RANGE = (0.0, 1.0)

# Checkpoints
CHECKPOINT_MAGIC = b"IBPCKPT\x00"
CHECKPOINT_VERSION = 1

# Output file names
METRICS_FILE = "metrics.csv"
CHECKPOINT_FILE = "checkpoint.ibp"
EFFECTIVE_CONFIG_FILE = "effective_config.json"
EVAL_FILE = "eval.csv"
GAIN_FILE = "difference_gains.csv"
PROFILE_FILE = "bound_profile.csv"
LAYER_GAIN_FILE = "layer_gains.csv"
GRADCHECK_FILE = "gradcheck.csv"

# Difference-gain audit
AUDIT_FAN_INS = (27, 576, 1152, 32768)
AUDIT_TRIALS = 100
