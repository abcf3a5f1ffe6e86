"""Numerical tolerances shared across modules (absolute unless noted)."""

TAU_PROB = 1e-12       # probability vector sums to one
TAU_COV = 1e-12        # elementwise covariance equality / symmetry
TAU_COND = 1e-9        # orthogonality and reference-mass residuals
TAU_FEAS = 1e-9        # spread of candidate fractions, discrete markets
TAU_FEAS_GRID = 1e-6   # spread of candidate fractions on quadrature grids
TAU_QUAD = 1e-10       # |value(K) - value(2K)| and grid normalisation
TAU_G = 1e-8           # |g| below this is treated as a zero return on grids
TAU_TELESCOPE = 1e-12  # |S_n - log(Z_n/Z_0)| when the weight is identically one
