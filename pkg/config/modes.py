from enum import Enum


class InitScheme(str, Enum):
    IBP = "ibp"
    XAVIER_UNIFORM = "xavier_uniform"
    XAVIER_GAUSSIAN = "xavier_gaussian"
    KAIMING_UNIFORM = "kaiming_uniform"
    KAIMING_GAUSSIAN = "kaiming_gaussian"


class BNMode(str, Enum):
    TRAIN = "train"
    EVAL = "eval"


class DatasetKind(str, Enum):
    MNIST = "mnist"
    BLOBS = "blobs"


class LayerKind(str, Enum):
    DENSE = "dense"
    CONV2D = "conv2d"
    RELU = "relu"
    BATCHNORM = "batchnorm"
    FLATTEN = "flatten"
    RESIDUAL_BEGIN = "residual_begin"
    RESIDUAL_ADD = "residual_add"
