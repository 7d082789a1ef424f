import numpy as np
import pytest

from selsample.domain import ImageTruth
from selsample.images import write_emblem
from selsample.predictor import SampleSet


@pytest.fixture(scope="session")
def emblem_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("img") / "emblem.pgm"
    write_emblem(path, 256)
    return path


@pytest.fixture(scope="session")
def emblem_truth(emblem_path):
    return ImageTruth.from_file(emblem_path)


def make_set(points, labels=None):
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if labels is None:
        labels = [0] * len(points)
    return SampleSet(points.shape[1], points, labels)
