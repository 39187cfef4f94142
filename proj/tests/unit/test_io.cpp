#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "amprt/io.hpp"

using namespace amprt;

namespace {

std::size_t parse_error_line(const std::string& text) {
    std::istringstream is(text);
    try {
        parse_logits(is);
    } catch (const ParseError& e) {
        return e.line();
    }
    return 0;
}

}  // namespace

TEST(Logits, ParseValid) {
    std::istringstream is("# amprt-logits v1\n# produced by hand\nid,z,yhat\na,1.5,1\nb, -2e-3 ,-1\n\nc,0,+1\n");
    const auto r = parse_logits(is);
    ASSERT_EQ(r.size(), 3u);
    EXPECT_EQ(r[0].id, "a");
    EXPECT_EQ(r[1].z, -2e-3);
    EXPECT_EQ(r[1].yhat, -1.0);
    EXPECT_EQ(r[2].yhat, 1.0);
}

TEST(Logits, EmptyBody) {
    std::istringstream is("id,z,yhat\n");
    EXPECT_TRUE(parse_logits(is).empty());
}

TEST(Logits, ErrorsNameTheLine) {
    EXPECT_EQ(parse_error_line("# x\nid,score,yhat\n"), 2u);
    EXPECT_EQ(parse_error_line("id,z,yhat\na,1,1\nb,abc,1\n"), 3u);
    EXPECT_EQ(parse_error_line("id,z,yhat\na,1,1\nb,2,0\n"), 3u);
    EXPECT_EQ(parse_error_line("id,z,yhat\na,1\n"), 2u);
    EXPECT_EQ(parse_error_line("id,z,yhat\n\n\na,1,1,9\n"), 4u);
    EXPECT_EQ(parse_error_line("id,z,yhat\na,nan,1\n"), 2u);
    EXPECT_EQ(parse_error_line("id,z,yhat\na,1.0x,1\n"), 2u);
    EXPECT_EQ(parse_error_line(""), 1u);
    try {
        std::istringstream is("id,z,yhat\na,1,1\nb,abc,1\n");
        parse_logits(is);
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
}

TEST(Logits, RoundTrip) {
    const std::vector<LogitRecord> in{{"x1", 0.1 + 0.2, 1.0}, {"x2", -1e-300, -1.0}, {"x3", 12345.678901234567, 1.0}};
    std::stringstream ss;
    write_logits(ss, in);
    const auto out = parse_logits(ss);
    ASSERT_EQ(out.size(), in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
        EXPECT_EQ(out[i].id, in[i].id);
        EXPECT_EQ(out[i].z, in[i].z);
        EXPECT_EQ(out[i].yhat, in[i].yhat);
    }
}

TEST(Targets, Format) {
    std::ostringstream os;
    write_targets(os, {{"a", 0.5}, {"b", -0.25}}, "{\"p\":0.1}");
    EXPECT_EQ(os.str(), "# amprt-targets v1\n# config: {\"p\":0.1}\nid,target\na,0.5\nb,-0.25\n");
}

TEST(Fit, JsonRoundTrip) {
    BimodalFit f;
    f.mu_plus = 1.0 / 3.0;
    f.mu_minus = -2.5;
    f.sigma_plus = 0.7;
    f.sigma_minus = 1.1;
    f.pi_plus = 0.45;
    f.iterations = 12;
    f.converged = true;
    const BimodalFit g = fit_from_json(fit_to_json(f));
    EXPECT_EQ(g.mu_plus, f.mu_plus);
    EXPECT_EQ(g.sigma_minus, f.sigma_minus);
    EXPECT_EQ(g.iterations, 12);
    EXPECT_TRUE(g.converged);
    EXPECT_THROW(fit_from_json("{\"mu_plus\": 1}"), ParseError);
    EXPECT_THROW(fit_from_json("not json"), ParseError);
    EXPECT_THROW(fit_from_json(R"({"schema":"amprt-bimodal-fit v1","mu_plus":1,"mu_minus":0,"sigma_plus":-1,"sigma_minus":1,"pi_plus":0.5})"),
                 ParseError);
}

TEST(Dataset, GmmRoundTripIsExact) {
    const GmmDataset ds = sample_gmm_dataset(GmmParams::make(1.5, 0.5, 0.2, 0.4, 30), RngStream(3, 0));
    std::stringstream ss;
    write_dataset(ss, ds, "{\"seed\":3}");
    const DatasetFile f = read_dataset(ss);
    EXPECT_EQ(f.model, "gmm");
    EXPECT_EQ(f.config_json, "{\"seed\":3}");
    EXPECT_EQ(f.signal, ds.mu);
    EXPECT_EQ(f.X, ds.X);
    EXPECT_EQ(f.y_true, ds.y_true);
    EXPECT_EQ(f.y_noisy, ds.y_noisy);
}

TEST(Dataset, GlmRoundTripIsExact) {
    const GlmDataset ds = sample_glm_dataset(GlmParams::make(1.0, 0.5, 0.2, LogisticLink{2.0}, 20), RngStream(3, 0));
    std::stringstream ss;
    write_dataset(ss, ds, "{\"link\":\"logistic:2\"}");
    const DatasetFile f = read_dataset(ss);
    EXPECT_EQ(f.model, "glm");
    EXPECT_EQ(f.signal, ds.beta);
    EXPECT_EQ(f.X, ds.X);
}

TEST(Dataset, Errors) {
    std::istringstream no_schema("mu,1,2\n");
    EXPECT_THROW(read_dataset(no_schema), ParseError);
    std::istringstream short_row("# amprt-dataset v1\nmu,1,2\nx,1,1,0.5\n");
    try {
        read_dataset(short_row);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(Table, WritesMetadataAndRows) {
    Table t;
    t.meta = {{"seed", "7"}};
    t.columns = {"a", "b"};
    t.add_row({"1", format_table(0.5)});
    EXPECT_THROW(t.add_row({"1"}), ShapeError);
    std::ostringstream os;
    t.write(os);
    EXPECT_EQ(os.str(), "# seed: 7\na\tb\n1\t0.5\n");
    EXPECT_EQ(format_exact(0.1), "0.10000000000000001");
}

TEST(Files, IoErrors) {
    EXPECT_THROW(read_text_file("/nonexistent/dir/file"), IoError);
    EXPECT_THROW(write_text_file("/nonexistent/dir/file", "x"), IoError);
    EXPECT_THROW(read_logits("/nonexistent/logits.csv"), IoError);
}
