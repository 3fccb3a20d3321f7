import numpy as np
import pytest
import torch

from tpnet.data import TEST_FILE, TRAIN_FILES, make_synthetic, save_cifar_batches


@pytest.fixture(autouse=True)
def _fixed_seed():
    torch.manual_seed(0)
    np.random.seed(0)


@pytest.fixture(scope="session")
def synthetic_arrays():
    return make_synthetic(n_train=640, n_test=512, seed=7)


@pytest.fixture(scope="session")
def synthetic_dataset_dir(tmp_path_factory, synthetic_arrays):
    """A directory holding a small corpus in the CIFAR-10 binary layout."""
    root = tmp_path_factory.mktemp("cifar-bin")
    tr_x, tr_y, te_x, te_y = synthetic_arrays
    save_cifar_batches(tr_x, tr_y, root, TRAIN_FILES)
    save_cifar_batches(te_x, te_y, root, (TEST_FILE,))
    return root
