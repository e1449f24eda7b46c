#pragma once

#include "mdpsolve/mdp.hpp"
#include "mdpsolve/rng.hpp"

#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <vector>

namespace mdpsolve {

/// Parse/shape error for the grid text format; carries 1-based coordinates
/// of the offending character.
class GridParseError : public std::runtime_error {
  public:
    GridParseError(int line, int column, const std::string& what)
        : std::runtime_error("grid parse error at line " + std::to_string(line) + ", column " +
                             std::to_string(column) + ": " + what),
          line(line),
          column(column) {}
    int line;
    int column;
};

/// Declarative 2D gridworld. Cells index row-major, cell = y * width + x.
/// Four move actions (N, E, S, W); a move lands in the intended cell with
/// p_intended and in each perpendicular neighbour with p_lateral. Moves into
/// obstacles or off the grid redirect their probability mass to staying put.
struct GridSpec {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> obstacle;  // width*height
    std::vector<int> goals;              // cell indices
    int start = -1;                      // optional, only used for rendering
    double p_intended = 0.8;
    double p_lateral = 0.1;
    double goal_reward = 100.0;
    double step_reward = 0.0;

    int cell(int x, int y) const { return y * width + x; }
    bool is_obstacle(int c) const { return obstacle[static_cast<std::size_t>(c)] != 0; }
};

enum GridAction : int { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3 };
constexpr int kGridActions = 4;

inline void validate_grid_spec(const GridSpec& spec) {
    if (spec.width <= 0 || spec.height <= 0)
        throw std::invalid_argument("grid: dimensions must be positive");
    if (spec.obstacle.size() != static_cast<std::size_t>(spec.width) * spec.height)
        throw std::invalid_argument("grid: obstacle mask size mismatch");
    if (std::abs(spec.p_intended + 2.0 * spec.p_lateral - 1.0) > 1e-9)
        throw std::invalid_argument("grid: p_intended + 2*p_lateral must equal 1");
    if (spec.p_intended <= 0.0 || spec.p_intended > 1.0 || spec.p_lateral < 0.0)
        throw std::invalid_argument("grid: noise probabilities out of range");
    if (spec.goals.empty())
        throw std::invalid_argument("grid: at least one goal cell required");
    for (int g : spec.goals) {
        if (g < 0 || g >= spec.width * spec.height)
            throw std::invalid_argument("grid: goal cell out of range");
        if (spec.is_obstacle(g))
            throw std::invalid_argument("grid: goal cell must not be an obstacle");
    }
    bool any_free = false;
    for (auto o : spec.obstacle)
        if (!o) any_free = true;
    if (!any_free)
        throw std::invalid_argument("grid: fully obstructed");
}

/// Grid text format: first line "W H", then H rows of W characters from
/// {'.', '#', 'G', 'S'}.
inline GridSpec parse_grid(const std::string& text) {
    GridSpec spec;
    std::size_t pos = 0;
    auto read_line = [&](int line_no) {
        if (pos >= text.size())
            throw GridParseError(line_no, 1, "unexpected end of input");
        std::size_t end = text.find('\n', pos);
        std::string line = text.substr(pos, end == std::string::npos ? std::string::npos
                                                                     : end - pos);
        pos = end == std::string::npos ? text.size() : end + 1;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        return line;
    };

    const std::string header = read_line(1);
    {
        std::size_t idx = 0;
        try {
            spec.width = std::stoi(header, &idx);
            spec.height = std::stoi(header.substr(idx));
        } catch (const std::exception&) {
            throw GridParseError(1, 1, "expected header \"W H\"");
        }
    }
    if (spec.width <= 0 || spec.height <= 0)
        throw GridParseError(1, 1, "dimensions must be positive");

    spec.obstacle.assign(static_cast<std::size_t>(spec.width) * spec.height, 0);
    for (int y = 0; y < spec.height; ++y) {
        const int line_no = y + 2;
        const std::string line = read_line(line_no);
        if (static_cast<int>(line.size()) != spec.width)
            throw GridParseError(line_no, static_cast<int>(line.size()) + 1,
                                 "expected " + std::to_string(spec.width) + " cells, got " +
                                     std::to_string(line.size()));
        for (int x = 0; x < spec.width; ++x) {
            const int c = spec.cell(x, y);
            switch (line[static_cast<std::size_t>(x)]) {
                case '.': break;
                case '#': spec.obstacle[static_cast<std::size_t>(c)] = 1; break;
                case 'G': spec.goals.push_back(c); break;
                case 'S': spec.start = c; break;
                default:
                    throw GridParseError(line_no, x + 1,
                                         std::string("invalid cell character '") +
                                             line[static_cast<std::size_t>(x)] + "'");
            }
        }
    }
    validate_grid_spec(spec);
    return spec;
}

inline std::string format_grid(const GridSpec& spec) {
    std::string out = std::to_string(spec.width) + " " + std::to_string(spec.height) + "\n";
    std::vector<char> cells(static_cast<std::size_t>(spec.width) * spec.height, '.');
    for (std::size_t c = 0; c < spec.obstacle.size(); ++c)
        if (spec.obstacle[c]) cells[c] = '#';
    for (int g : spec.goals) cells[static_cast<std::size_t>(g)] = 'G';
    if (spec.start >= 0) cells[static_cast<std::size_t>(spec.start)] = 'S';
    for (int y = 0; y < spec.height; ++y) {
        out.append(cells.begin() + static_cast<std::ptrdiff_t>(y) * spec.width,
                   cells.begin() + static_cast<std::ptrdiff_t>(y + 1) * spec.width);
        out.push_back('\n');
    }
    return out;
}

/// Mdp plus the cell<->state mapping needed to render grid-shaped output.
struct GridMdp {
    Mdp mdp;
    GridSpec spec;
    std::vector<int> cell_to_state;  // -1 for obstacles
    std::vector<int> state_to_cell;
};

/// Build the MDP of a gridworld: one state per free cell, goal states
/// absorbing, reward goal_reward on any transition entering a goal and
/// step_reward otherwise (transitions out of a goal are worth 0 so goal
/// values stay at the zero fixed point).
inline GridMdp build_grid_mdp(const GridSpec& spec) {
    validate_grid_spec(spec);

    GridMdp g;
    g.spec = spec;
    g.cell_to_state.assign(static_cast<std::size_t>(spec.width) * spec.height, -1);
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            const int c = spec.cell(x, y);
            if (!spec.is_obstacle(c)) {
                g.cell_to_state[static_cast<std::size_t>(c)] = static_cast<int>(g.state_to_cell.size());
                g.state_to_cell.push_back(c);
            }
        }
    }

    const int n_states = static_cast<int>(g.state_to_cell.size());
    MdpBuilder builder(n_states, kGridActions);

    std::vector<std::uint8_t> goal_cell(static_cast<std::size_t>(spec.width) * spec.height, 0);
    for (int gc : spec.goals) {
        goal_cell[static_cast<std::size_t>(gc)] = 1;
        builder.add_goal(g.cell_to_state[static_cast<std::size_t>(gc)]);
    }

    constexpr int dx[kGridActions] = {0, 1, 0, -1};
    constexpr int dy[kGridActions] = {-1, 0, 1, 0};

    for (int s = 0; s < n_states; ++s) {
        const int c = g.state_to_cell[static_cast<std::size_t>(s)];
        const int x = c % spec.width;
        const int y = c / spec.width;
        if (goal_cell[static_cast<std::size_t>(c)]) {
            for (int a = 0; a < kGridActions; ++a)
                builder.add_transition(s, a, s, 1.0, 0.0);
            continue;
        }
        // Landing state for a move in direction d; blocked moves stay put.
        auto landing = [&](int d) {
            const int nx = x + dx[d];
            const int ny = y + dy[d];
            if (nx < 0 || nx >= spec.width || ny < 0 || ny >= spec.height)
                return s;
            const int nc = spec.cell(nx, ny);
            if (spec.is_obstacle(nc))
                return s;
            return g.cell_to_state[static_cast<std::size_t>(nc)];
        };
        for (int a = 0; a < kGridActions; ++a) {
            const int lateral_a = (a + 1) % 4;
            const int lateral_b = (a + 3) % 4;
            auto add = [&](int target, double p) {
                if (p <= 0.0)
                    return;
                const bool entering_goal =
                    goal_cell[static_cast<std::size_t>(g.state_to_cell[static_cast<std::size_t>(target)])];
                const double r = entering_goal ? spec.goal_reward : spec.step_reward;
                builder.add_transition(s, a, target, p, r);
            };
            add(landing(a), spec.p_intended);
            add(landing(lateral_a), spec.p_lateral);
            add(landing(lateral_b), spec.p_lateral);
        }
    }
    g.mdp = builder.build();
    return g;
}

/// Random MDP for scaling experiments: every non-goal (state, action) row
/// has `successors_per_action` distinct successors with random normalized
/// weights; one uniformly chosen state is the absorbing goal. Entering the
/// goal pays goal_reward. Deterministic in `seed`.
inline Mdp build_random_mdp(int n_states, int n_actions, int successors_per_action,
                            std::uint64_t seed, double goal_reward = 100.0) {
    if (n_states <= 0 || n_actions <= 0)
        throw std::invalid_argument("build_random_mdp: counts must be positive");
    if (successors_per_action < 1)
        throw std::invalid_argument("build_random_mdp: successors_per_action must be >= 1");
    if (successors_per_action > n_states)
        throw std::invalid_argument("build_random_mdp: more successors than states");

    SplitMix64Stream rng(seed);
    const int goal = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n_states)));

    MdpBuilder builder(n_states, n_actions);
    builder.add_goal(goal);

    std::vector<int> pool(static_cast<std::size_t>(n_states));
    for (int s = 0; s < n_states; ++s) {
        if (s == goal) {
            for (int a = 0; a < n_actions; ++a)
                builder.add_transition(s, a, s, 1.0, 0.0);
            continue;
        }
        for (int a = 0; a < n_actions; ++a) {
            // Partial Fisher-Yates: first k entries of pool become the
            // successor set, deterministically from the stream.
            for (int i = 0; i < n_states; ++i)
                pool[static_cast<std::size_t>(i)] = i;
            for (int i = 0; i < successors_per_action; ++i) {
                const auto j =
                    i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n_states - i)));
                std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
            }
            double total = 0.0;
            std::vector<double> weight(static_cast<std::size_t>(successors_per_action));
            for (int i = 0; i < successors_per_action; ++i) {
                weight[static_cast<std::size_t>(i)] = 0.05 + rng.next_double();
                total += weight[static_cast<std::size_t>(i)];
            }
            for (int i = 0; i < successors_per_action; ++i) {
                const int s2 = pool[static_cast<std::size_t>(i)];
                const double r = (s2 == goal) ? goal_reward : 0.0;
                builder.add_transition(s, a, s2, weight[static_cast<std::size_t>(i)] / total, r);
            }
        }
    }
    return builder.build();
}

/// Random obstacle layout with a random goal (and start) cell. When
/// `ensure_connected` is set, layouts are re-rolled (deterministically)
/// until every free cell can reach the goal by 4-connected moves.
inline GridSpec random_grid_spec(int width, int height, double obstacle_fraction,
                                 std::uint64_t seed, bool ensure_connected = true) {
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("random_grid_spec: dimensions must be positive");
    if (obstacle_fraction < 0.0 || obstacle_fraction >= 1.0)
        throw std::invalid_argument("random_grid_spec: obstacle_fraction must be in [0,1)");

    const int n_cells = width * height;
    SplitMix64Stream rng(seed);

    for (int attempt = 0; attempt < 1000; ++attempt) {
        GridSpec spec;
        spec.width = width;
        spec.height = height;
        spec.obstacle.assign(static_cast<std::size_t>(n_cells), 0);
        const int n_obstacles = static_cast<int>(obstacle_fraction * n_cells);
        int placed = 0;
        while (placed < n_obstacles) {
            const int c = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n_cells)));
            if (!spec.obstacle[static_cast<std::size_t>(c)]) {
                spec.obstacle[static_cast<std::size_t>(c)] = 1;
                ++placed;
            }
        }
        std::vector<int> free_cells;
        for (int c = 0; c < n_cells; ++c)
            if (!spec.obstacle[static_cast<std::size_t>(c)])
                free_cells.push_back(c);
        if (free_cells.empty())
            continue;
        spec.goals = {free_cells[rng.next_below(free_cells.size())]};
        spec.start = free_cells[rng.next_below(free_cells.size())];

        if (ensure_connected) {
            std::vector<std::uint8_t> seen(static_cast<std::size_t>(n_cells), 0);
            std::deque<int> queue{spec.goals[0]};
            seen[static_cast<std::size_t>(spec.goals[0])] = 1;
            std::size_t reached = 0;
            while (!queue.empty()) {
                const int c = queue.front();
                queue.pop_front();
                ++reached;
                const int x = c % width;
                const int y = c / width;
                const int nx[4] = {x, x + 1, x, x - 1};
                const int ny[4] = {y - 1, y, y + 1, y};
                for (int d = 0; d < 4; ++d) {
                    if (nx[d] < 0 || nx[d] >= width || ny[d] < 0 || ny[d] >= height)
                        continue;
                    const int nc = ny[d] * width + nx[d];
                    if (spec.obstacle[static_cast<std::size_t>(nc)] ||
                        seen[static_cast<std::size_t>(nc)])
                        continue;
                    seen[static_cast<std::size_t>(nc)] = 1;
                    queue.push_back(nc);
                }
            }
            if (reached != free_cells.size())
                continue;  // disconnected layout, re-roll
        }
        return spec;
    }
    throw std::runtime_error("random_grid_spec: no connected layout found");
}

}  // namespace mdpsolve
