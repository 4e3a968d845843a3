"""sfkernel: a symbolic and numeric calculus for s-finite measures and
kernels, with a small first-order probabilistic language whose programs
denote kernels in the calculus."""

__version__ = "0.1.0"
