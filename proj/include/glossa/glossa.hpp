#pragma once

// Everything except the HTTP layer (glossa/http.hpp), which pulls in
// cpp-httplib.

#include "glossa/alignment.hpp"
#include "glossa/corpus.hpp"
#include "glossa/crf.hpp"
#include "glossa/dictionary.hpp"
#include "glossa/errors.hpp"
#include "glossa/harness.hpp"
#include "glossa/hmm.hpp"
#include "glossa/metrics.hpp"
#include "glossa/neural.hpp"
#include "glossa/projection.hpp"
#include "glossa/propagation.hpp"
#include "glossa/service.hpp"
#include "glossa/synthetic.hpp"
#include "glossa/tag.hpp"
#include "glossa/taggers.hpp"
#include "glossa/text.hpp"
