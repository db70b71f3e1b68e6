from .activations import activate, elu1, relu, sigmoid, softmax, tanh
from .network import (
    LstmState,
    NetworkConfig,
    NetworkParams,
    backward,
    batch_loss,
    forward,
    forward_batch,
    init_params,
    loss_and_grad,
    lstm_step,
    nll_loss,
    param_shapes,
    reg_nll_loss,
)
from .optim import AdamState, adam_step, glorot_bound, glorot_uniform
from .serialize import TrainedNetwork
from .training import DEFAULT_SEEDS, EarlyStopping, TrainConfig, TrainResult, train, train_best_of

# the three architectures: K=2 plain, K=2 with the pi penalty, K=3 plain
ARCHITECTURES = {
    "nnet1": NetworkConfig(n_components=2, loss="nll"),
    "nnet2": NetworkConfig(n_components=2, loss="reg_nll", reg_lambda=0.1),
    "nnet3": NetworkConfig(n_components=3, loss="nll"),
}
