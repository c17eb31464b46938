#pragma once

#include "snpmix/benchmark.hpp"
#include "snpmix/dataset.hpp"
#include "snpmix/decision.hpp"
#include "snpmix/error.hpp"
#include "snpmix/genotype_model.hpp"
#include "snpmix/hyperprior.hpp"
#include "snpmix/io.hpp"
#include "snpmix/mixture_em.hpp"
#include "snpmix/numerics.hpp"
#include "snpmix/parallel.hpp"
#include "snpmix/rng.hpp"
#include "snpmix/simulate.hpp"
#include "snpmix/snpwise.hpp"
