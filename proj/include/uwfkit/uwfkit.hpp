#ifndef UWFKIT_UWFKIT_HPP
#define UWFKIT_UWFKIT_HPP

#include "core.hpp"
#include "features.hpp"
#include "geometry.hpp"
#include "image_io.hpp"
#include "imgproc.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"
#include "scale_space.hpp"
#include "synth.hpp"
#include "vesselness.hpp"

#endif
