import numpy as np
import pytest

from mammosvm import synthetic
from mammosvm.dataset import Label
from mammosvm.features import FeatureVector


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    """Small synthetic PGM corpus (6 benign + 6 malignant) with manifest."""
    root = tmp_path_factory.mktemp("corpus")
    synthetic.write_fixture(root, synthetic.FixtureSpec(per_class=6, seed=11))
    return root


def make_vectors(points, labels, schema=None):
    """Build FeatureVectors from a point array and +1/-1 labels."""
    points = np.asarray(points, dtype=np.float64)
    if schema is None:
        schema = tuple(f"f{j}" for j in range(points.shape[1]))
    out = []
    for i, (row, lab) in enumerate(zip(points, labels)):
        label = Label.BENIGN if lab > 0 else Label.MALIGNANT
        out.append(FeatureVector(f"v{i}", label, row.copy(), schema))
    return out
