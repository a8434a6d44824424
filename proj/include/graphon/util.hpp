#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace graphon {

/// Brent root finder on [lo, hi]; f(lo) and f(hi) must have opposite signs
/// (or one of them be zero). Returns the abscissa.
double brent_root(const std::function<double(double)>& f, double lo, double hi,
                  double xtol = 1e-12, int max_iter = 200);

/// Formats with 15 significant digits (CSV convention).
std::string fmt15(double v);

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Results must
/// be written to index-keyed slots by the caller; the schedule carries no
/// information.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

/// Worker count: explicit argument if > 0, else GRAPHON_LAB_THREADS, else
/// hardware concurrency.
int resolve_threads(int requested);

}  // namespace graphon
