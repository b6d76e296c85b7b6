"""TFHE Boolean gates with unrolled bootstrapping keys and an integer lifting FFT."""

__version__ = "0.1.0"
