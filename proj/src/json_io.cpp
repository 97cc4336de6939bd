#include <mtps/errors.hpp>
#include <mtps/json_io.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace mtps {

    json vec_to_json(const Vec& v)
    {
        json j = json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i)
            j.push_back(v(i));
        return j;
    }

    json mat_to_json(const Mat& m)
    {
        json j = json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                row.push_back(m(r, c));
            j.push_back(std::move(row));
        }
        return j;
    }

    const json& require(const json& j, const std::string& field)
    {
        if (!j.is_object() || !j.contains(field))
            throw LoadError("missing field '" + field + "'");
        return j.at(field);
    }

    Vec vec_field(const json& j, const std::string& field)
    {
        const json& a = require(j, field);
        if (!a.is_array())
            throw LoadError("field '" + field + "' is not an array");
        Vec v(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!a[i].is_number())
                throw LoadError("field '" + field + "' has a non-numeric entry");
            v(i) = a[i].get<double>();
        }
        return v;
    }

    Mat mat_field(const json& j, const std::string& field)
    {
        const json& a = require(j, field);
        if (!a.is_array())
            throw LoadError("field '" + field + "' is not an array");
        const std::size_t rows = a.size();
        const std::size_t cols = rows ? a[0].size() : 0;
        Mat m(rows, cols);
        for (std::size_t r = 0; r < rows; ++r) {
            if (!a[r].is_array() || a[r].size() != cols)
                throw LoadError("field '" + field + "' is not a rectangular matrix");
            for (std::size_t c = 0; c < cols; ++c) {
                if (!a[r][c].is_number())
                    throw LoadError("field '" + field + "' has a non-numeric entry");
                m(r, c) = a[r][c].get<double>();
            }
        }
        return m;
    }

    double double_field(const json& j, const std::string& field)
    {
        const json& v = require(j, field);
        if (!v.is_number())
            throw LoadError("field '" + field + "' is not a number");
        return v.get<double>();
    }

    long long int_field(const json& j, const std::string& field)
    {
        const json& v = require(j, field);
        if (!v.is_number_integer())
            throw LoadError("field '" + field + "' is not an integer");
        return v.get<long long>();
    }

    std::string string_field(const json& j, const std::string& field)
    {
        const json& v = require(j, field);
        if (!v.is_string())
            throw LoadError("field '" + field + "' is not a string");
        return v.get<std::string>();
    }

    json task_to_json(const TaskSpec& t)
    {
        return json{{"relation", t.relation == TaskRelation::Difference ? "difference" : "identity"}, {"eta", vec_to_json(t.eta)},
            {"sigma_eta", mat_to_json(t.sigma_eta)}, {"task_dims", t.task_dims}};
    }

    TaskSpec task_from_json(const json& j)
    {
        const std::string rel = string_field(j, "relation");
        const Vec eta = vec_field(j, "eta");
        Mat sigma = mat_field(j, "sigma_eta");
        if (sigma.size() == 0)
            sigma = Mat::Zero(eta.size(), eta.size());
        if (rel == "identity")
            return TaskSpec::identity(eta, sigma);
        if (rel != "difference")
            throw LoadError("field 'relation' must be 'difference' or 'identity'");
        const json& dims = require(j, "task_dims");
        if (!dims.is_array())
            throw LoadError("field 'task_dims' is not an array");
        std::vector<int> idx;
        for (const auto& d : dims) {
            if (!d.is_number_integer())
                throw LoadError("field 'task_dims' has a non-integer entry");
            idx.push_back(d.get<int>());
        }
        return TaskSpec::difference(eta, sigma, idx);
    }

    std::string dump(const json& j) { return j.dump(2) + "\n"; }

    void write_json_file(const std::string& path, const json& j)
    {
        // Write then rename, so an interrupted save leaves the previous file intact.
        const std::string tmp = path + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary);
            if (!out)
                throw std::runtime_error("cannot write " + tmp);
            out << dump(j);
            if (!out)
                throw std::runtime_error("failed writing " + tmp);
        }
        std::filesystem::rename(tmp, path);
    }

    json read_json_file(const std::string& path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw LoadError("cannot open " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        try {
            return json::parse(ss.str());
        }
        catch (const json::parse_error& e) {
            throw LoadError("corrupted file " + path + ": " + e.what());
        }
    }

} // namespace mtps
