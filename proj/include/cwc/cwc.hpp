#ifndef CWC_CWC_HPP
#define CWC_CWC_HPP

#include "ensemble.hpp"
#include "error.hpp"
#include "hybrid.hpp"
#include "model.hpp"
#include "multiset.hpp"
#include "ode.hpp"
#include "pattern.hpp"
#include "rng.hpp"
#include "stochastic.hpp"
#include "term.hpp"
#include "trajectory.hpp"

#endif // CWC_CWC_HPP
