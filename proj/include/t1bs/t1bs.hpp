#ifndef T1BS_T1BS_HPP
#define T1BS_T1BS_HPP

#include "t1bs/acquisition.hpp"
#include "t1bs/csv.hpp"
#include "t1bs/evaluation.hpp"
#include "t1bs/manifest.hpp"
#include "t1bs/mlp.hpp"
#include "t1bs/nlls.hpp"
#include "t1bs/parallel.hpp"
#include "t1bs/params_io.hpp"
#include "t1bs/presets.hpp"
#include "t1bs/render.hpp"
#include "t1bs/rng.hpp"
#include "t1bs/signal_model.hpp"
#include "t1bs/simulator.hpp"
#include "t1bs/training.hpp"
#include "t1bs/types.hpp"

#endif  // T1BS_T1BS_HPP
