#pragma once

#include "adaseg/analysis.hpp"
#include "adaseg/engine.hpp"
#include "adaseg/errors.hpp"
#include "adaseg/image.hpp"
#include "adaseg/image_io.hpp"
#include "adaseg/indicators.hpp"
#include "adaseg/partition.hpp"
#include "adaseg/render.hpp"
#include "adaseg/strategies.hpp"
#include "adaseg/synthetic.hpp"
#include "adaseg/trace.hpp"
