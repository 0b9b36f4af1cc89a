import numpy as np
import pytest

from pyblockage.sim import geometry as geo

P = geo.Point


def side_wall(y=2.0, x_max=10.0):
    return geo.Wall(point=P(0, y, 0), normal=P(0, -1, 0),
                    extent_min=P(-10, y, 0), extent_max=P(x_max, y, 3),
                    reflection_loss_db=10.0, name='side')


def link_scene(walls=(), blockers=()):
    return geo.Scene(room_min=P(-1, -3, 0), room_max=P(6, 2, 3),
                     tx=P(0, 0, 1), rx=P(4, 0, 1),
                     tx_boresight_az=0.0, rx_boresight_az=180.0,
                     walls=tuple(walls), blockers=tuple(blockers))


def test_position_at_interpolates():
    traj = geo.Trajectory(((0.0, P(0, 0, 0)), (2.0, P(2, 4, 0))))
    p = geo.position_at(traj, 0.5)
    assert (p.x, p.y, p.z) == pytest.approx((0.5, 1.0, 0.0))


def test_position_at_clamps():
    traj = geo.Trajectory(((1.0, P(0, 0, 0)), (2.0, P(1, 1, 0))))
    assert geo.position_at(traj, -5.0) == P(0, 0, 0)
    assert geo.position_at(traj, 10.0) == P(1, 1, 0)


def test_single_waypoint_is_stationary():
    traj = geo.Trajectory(((0.0, P(1, 2, 0)),))
    assert geo.position_at(traj, 3.0) == P(1, 2, 0)


@pytest.mark.parametrize('xyz', [(np.nan, 0, 1), (0, np.inf, 1),
                                 (0, 0, -np.inf)])
def test_point_rejects_non_finite(xyz):
    with pytest.raises(ValueError):
        P(*xyz)


def test_trajectory_rejects_unordered_times():
    with pytest.raises(ValueError):
        geo.Trajectory(((1.0, P(0, 0, 0)), (1.0, P(1, 0, 0))))


def test_los_only():
    paths = geo.trace_paths(link_scene())
    assert len(paths) == 1
    assert paths[0].kind == 'LOS'
    assert paths[0].length_m == pytest.approx(4.0)
    assert paths[0].aod_az == pytest.approx(0.0)
    assert paths[0].aoa_az == pytest.approx(0.0)


def test_single_wall_reflection():
    """The image method gives a 2*sqrt(8) m path leaving at 45 degrees."""
    paths = geo.trace_paths(link_scene([side_wall()]))
    assert [p.kind for p in paths] == ['LOS', 'Reflected']
    refl = paths[1]
    assert refl.length_m == pytest.approx(2 * np.sqrt(8), abs=1e-9)
    assert refl.length_m == pytest.approx(5.657, abs=1e-3)
    assert refl.aod_az == pytest.approx(45.0)
    q = refl.vertices[1]
    assert (q.x, q.y, q.z) == pytest.approx((2.0, 2.0, 1.0))
    assert refl.path_id == 'NLOS-side'


def test_reflection_outside_extent_is_dropped():
    paths = geo.trace_paths(link_scene([side_wall(x_max=1.0)]))
    assert len(paths) == 1


def test_reflection_length_matches_image_distance():
    walls = geo.room_walls(P(-1, -3, 0), P(6, 2, 3))
    scene = link_scene(walls)
    for path in geo.trace_paths(scene):
        if path.kind != 'Reflected':
            continue
        wall = walls[path.wall_id]
        image = wall.mirror(scene.rx.xyz)
        assert path.length_m == pytest.approx(
            np.linalg.norm(image - scene.tx.xyz), abs=1e-9)
        # equal angles of incidence and reflection
        q = path.vertices[1].xyz
        n = wall.normal.xyz
        v_in = (q - scene.tx.xyz) / np.linalg.norm(q - scene.tx.xyz)
        v_out = (scene.rx.xyz - q) / np.linalg.norm(scene.rx.xyz - q)
        assert np.dot(-v_in, n) == pytest.approx(np.dot(v_out, n))


def test_paths_sorted_by_length():
    walls = geo.room_walls(P(-1, -3, 0), P(6, 2, 3))
    lengths = [p.length_m for p in geo.trace_paths(link_scene(walls))]
    assert lengths == sorted(lengths)
    assert len(lengths) == 5


def test_wall_requires_unit_normal():
    with pytest.raises(ValueError):
        geo.Wall(point=P(0, 2, 0), normal=P(0, -2, 0),
                 extent_min=P(0, 2, 0), extent_max=P(4, 2, 3))


def test_scene_rejects_antenna_outside_room():
    with pytest.raises(ValueError):
        geo.Scene(room_min=P(0, 0, 0), room_max=P(1, 1, 1),
                  tx=P(0.5, 0.5, 0.5), rx=P(4, 0, 1))


def test_screen_at_faces_the_link():
    traj = geo.Trajectory(((0.0, P(2, -1, 0)), (2.0, P(2, 1, 0))))
    blocker = geo.Blocker(traj, width_m=0.4, height_m=1.8)
    screen = geo.screen_at(blocker, 1.0, P(0, 0, 1), P(4, 0, 1))
    assert (screen.center.x, screen.center.y) == pytest.approx((2.0, 0.0))
    assert screen.center.z == pytest.approx(0.9)
    assert (screen.normal.x, screen.normal.y, screen.normal.z) == \
        pytest.approx((1.0, 0.0, 0.0))


def test_room_walls_point_inward():
    walls = geo.room_walls(P(0, 0, 0), P(6, 5, 3))
    centre = np.array([3.0, 2.5, 1.5])
    for wall in walls:
        assert wall.signed_distance(centre) > 0
