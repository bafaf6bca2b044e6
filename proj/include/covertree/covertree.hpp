#ifndef COVERTREE_COVERTREE_HPP
#define COVERTREE_COVERTREE_HPP

#include "approx.hpp"
#include "build.hpp"
#include "datasets.hpp"
#include "debug.hpp"
#include "diagnostics.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "k_smallest.hpp"
#include "levels.hpp"
#include "metric.hpp"
#include "search.hpp"
#include "tree.hpp"

#endif
