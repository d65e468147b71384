import logging

import torch

from common.errors import ValidationError

logger = logging.getLogger(__name__)


def resolve_device(name="cpu"):
    """'cpu', 'cuda', 'cuda:N' 혹은 'auto' 를 torch.device 로 바꾼다."""
    if name == "auto":
        name = "cuda" if torch.cuda.is_available() else "cpu"
    if str(name).startswith("cuda") and not torch.cuda.is_available():
        raise ValidationError(f"device {name!r} requested but CUDA is not available")
    try:
        return torch.device(name)
    except RuntimeError as e:
        raise ValidationError(f"unknown torch device {name!r}") from e


def print_gpu_info(device):
    device = torch.device(device)
    logger.info("torch %s, SVD device %s", torch.__version__, device)
    if device.type == "cuda":
        logger.info("Available devices %d", torch.cuda.device_count())
        logger.info("Current cuda device %d", torch.cuda.current_device())
        logger.info(torch.cuda.get_device_name(device))
