#pragma once

#include "layocr/core.hpp"
#include "layocr/det_eval.hpp"
#include "layocr/fusion.hpp"
#include "layocr/harness.hpp"
#include "layocr/image.hpp"
#include "layocr/metrics.hpp"
#include "layocr/ocr.hpp"
#include "layocr/preprocess.hpp"
#include "layocr/synth/augment.hpp"
#include "layocr/synth/corpus.hpp"
#include "layocr/synth/kde.hpp"
#include "layocr/synth/layout.hpp"
#include "layocr/synth/raster.hpp"
