import os

# the package's dense kernels run fastest with single-threaded BLAS (60x60
# blocks); set before numpy initializes anywhere in the test process
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
