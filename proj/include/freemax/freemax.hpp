#ifndef FREEMAX_FREEMAX_HPP
#define FREEMAX_FREEMAX_HPP

#include "freemax/attraction.hpp"
#include "freemax/cdf.hpp"
#include "freemax/cdf_algebra.hpp"
#include "freemax/extreme_laws.hpp"
#include "freemax/free_poisson_lab.hpp"
#include "freemax/free_poisson_laws.hpp"
#include "freemax/io.hpp"
#include "freemax/laws.hpp"
#include "freemax/numerics.hpp"
#include "freemax/random.hpp"
#include "freemax/spectral_order.hpp"

#endif  // FREEMAX_FREEMAX_HPP
