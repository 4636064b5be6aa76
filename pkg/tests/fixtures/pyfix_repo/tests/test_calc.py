from src.calc import add, clamp, mul


def test_add():
    assert add(2, 3) == 5


def test_mul():
    assert mul(4, 5) == 20


def test_clamp_low():
    assert clamp(-1, 0, 10) == 0


def test_clamp_high():
    assert clamp(99, 0, 10) == 10


def test_clamp_mid():
    assert clamp(5, 0, 10) == 5
