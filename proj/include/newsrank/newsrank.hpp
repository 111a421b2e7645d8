#pragma once

#include "newsrank/assemble.hpp"
#include "newsrank/backend.hpp"
#include "newsrank/candidate.hpp"
#include "newsrank/config.hpp"
#include "newsrank/corpus.hpp"
#include "newsrank/date.hpp"
#include "newsrank/digest.hpp"
#include "newsrank/errors.hpp"
#include "newsrank/evaluate.hpp"
#include "newsrank/format.hpp"
#include "newsrank/index.hpp"
#include "newsrank/jsonl.hpp"
#include "newsrank/pipeline.hpp"
#include "newsrank/prompts.hpp"
#include "newsrank/rerank.hpp"
#include "newsrank/summarize.hpp"
#include "newsrank/targets.hpp"
#include "newsrank/tokenizer.hpp"
