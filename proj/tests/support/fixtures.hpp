#pragma once

#include "lightdxml/bundle.hpp"
#include "lightdxml/dataset.hpp"

namespace fixture {

struct Trained {
    lightdxml::SyntheticCorpus data;
    lightdxml::Corpus train;
    lightdxml::Corpus test;
    lightdxml::EmbeddingTable table;
    lightdxml::TrainConfig config;
    lightdxml::ModelBundle bundle;
};

/// Small synthetic corpus trained with a short schedule. Built once per process.
const Trained& small_model();

/// Config for a quick run on the small corpus.
lightdxml::TrainConfig quick_config();

}  // namespace fixture
