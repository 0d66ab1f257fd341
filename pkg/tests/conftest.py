import pytest

from senttune import kernels
from senttune.corpus import make_clean_comment
from senttune.labeling import (
    LabeledDataset,
    LabeledExample,
    LabelSource,
    SentimentLabel,
)


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    """Run the test once per built kernel backend."""
    previous = kernels.use(request.param)
    yield request.param
    kernels.use(previous)


@pytest.fixture
def make_dataset():
    def build(texts_labels, split="train", source=LabelSource.LLM, tag=""):
        examples = tuple(
            LabeledExample(
                comment=make_clean_comment(f"c{tag}{i}", text),
                label=SentimentLabel(label),
                source=source,
            )
            for i, (text, label) in enumerate(texts_labels)
        )
        return LabeledDataset(examples, split=split)

    return build
