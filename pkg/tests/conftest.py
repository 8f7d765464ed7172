import pytest

from covstim.corpus import load_bundled_corpus

TOY1_SOURCE = """
module toy1 (input a[1], output y[1]);
  reg s[1] = 0;
  if (a == 1) { next s = 1; } else { next s = 0; }
  assign y = s;
  cover y { zero: 0..0, one: 1..1 }
endmodule
"""


@pytest.fixture(scope="session")
def corpus():
    return load_bundled_corpus()


@pytest.fixture(scope="session")
def toy1(corpus):
    return corpus[0]


@pytest.fixture
def toy1_source():
    return TOY1_SOURCE
