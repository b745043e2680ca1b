#include "fixtures.hpp"

#include "lightdxml/trainer.hpp"

namespace fixture {

lightdxml::TrainConfig quick_config() {
    lightdxml::TrainConfig c;
    c.e_model = 4;
    c.e_label = 4;
    c.e_hat_label = 2;
    c.shortlist_k = 20;
    c.validation_fraction = 0.0;
    return c;
}

const Trained& small_model() {
    static const Trained trained = [] {
        Trained t;
        lightdxml::SyntheticConfig sc;
        sc.n_points = 600;
        sc.n_labels = 40;
        sc.n_features = 32;
        sc.dim = 32;
        t.data = lightdxml::generate_synthetic(sc);
        auto [train, test] = lightdxml::split(t.data.corpus, 0.25, 5);
        t.train = std::move(train);
        t.test = std::move(test);
        t.table = lightdxml::identity_embedding_table(sc.n_features, sc.dim);
        t.config = quick_config();
        lightdxml::TrainOptions opts;
        opts.embeddings = &t.table;
        t.bundle = lightdxml::run_training(t.train, t.config, opts);
        return t;
    }();
    return trained;
}

}  // namespace fixture
