#pragma once

#include "ronfa/embedding_store.hpp"
#include "ronfa/episode_sampler.hpp"
#include "ronfa/errors.hpp"
#include "ronfa/eval_harness.hpp"
#include "ronfa/geometry.hpp"
#include "ronfa/neural_field.hpp"
#include "ronfa/prototype_builder.hpp"
#include "ronfa/random.hpp"
#include "ronfa/report.hpp"
