#pragma once

// Umbrella header for the ndtex library.

#include "ndtex/cooccur.hpp"
#include "ndtex/corpus.hpp"
#include "ndtex/error.hpp"
#include "ndtex/features.hpp"
#include "ndtex/image.hpp"
#include "ndtex/image_io.hpp"
#include "ndtex/retrieval.hpp"
