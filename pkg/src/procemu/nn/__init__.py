from .checkpoint import load_checkpoint, params_digest, save_checkpoint
from .layers import (
    MLP,
    Dense,
    LSTMCell,
    Param,
    cross_entropy_from_logits,
    dense_backward,
    dense_forward,
    log_softmax,
    lstm_cell_backward,
    lstm_cell_step,
    relu,
    relu_backward,
    sigmoid,
    softmax,
    softmax_backward,
)
from .optim import AdamState, adam_update, lr_schedule, zero_grads
