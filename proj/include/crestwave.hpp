#pragma once

// Library surface without the CLI plumbing (no OpenSSL or spdlog needed).
#include "crestwave/asymptotics.hpp"
#include "crestwave/chebyshev.hpp"
#include "crestwave/coefficients.hpp"
#include "crestwave/diagnostics.hpp"
#include "crestwave/error.hpp"
#include "crestwave/halfstrip.hpp"
#include "crestwave/lambda_pipeline.hpp"
#include "crestwave/spectrum.hpp"
#include "crestwave/transforms.hpp"
#include "crestwave/vorticity.hpp"
