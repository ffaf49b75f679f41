import pytest

from spansteer.annotation import FixtureProvider
from spansteer.fixtures import overfit_corpus
from spansteer.oracles import label_corpus
from spansteer.qa import LexicalStubAnswerer, TemplateStubGenerator


@pytest.fixture
def provider():
    return FixtureProvider()


@pytest.fixture
def qg():
    return TemplateStubGenerator()


@pytest.fixture
def qa():
    return LexicalStubAnswerer()


@pytest.fixture(scope="session")
def labeled_overfit_corpus():
    return list(label_corpus(overfit_corpus(), "qa",
                             qg=TemplateStubGenerator(),
                             qa=LexicalStubAnswerer()))
