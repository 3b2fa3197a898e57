use std::f64::consts::FRAC_PI_2;

use roadtest::lanelet::GeoOrigin;
use roadtest::opendrive::{check_schema, emit_opendrive, parse_opendrive};
use roadtest::openscenario::{instantiate_xosc, parse_xosc, EgoStart, ScenarioConfig, XoscTemplate};
use roadtest::road::{validate_network_with, ContactPoint, RoadLink, PARSED_TOLERANCE};
use roadtest::roadgen::{LanePosition, Template};
use roadtest::sim::{parse_csv, run_simulation, AdfParams, SimStatus, SimWorld, VehicleParams, DEFAULT_DT};

/// Written by hand in the style of other tools: six decimals, extra
/// attributes and an elevation profile the parser should skip.
const GOLDEN_XODR: &str = r#"<?xml version="1.0" standalone="yes"?>
<OpenDRIVE>
  <header revMajor="1" revMinor="6" name="hand" vendor="someone"/>
  <road name="approach" length="30.0" id="1" junction="-1">
    <link>
      <successor elementType="road" elementId="2" contactPoint="start"/>
    </link>
    <type s="0.0" type="town"/>
    <planView>
      <geometry s="0.000000" x="0.000000" y="0.000000" hdg="0.000000" length="30.000000">
        <line/>
      </geometry>
    </planView>
    <elevationProfile>
      <elevation s="0" a="0" b="0" c="0" d="0"/>
    </elevationProfile>
    <lanes>
      <laneSection s="0">
        <left><lane id="1" type="driving" level="false"><width sOffset="0" a="3.25" b="0" c="0" d="0"/></lane></left>
        <center><lane id="0" type="none" level="false"/></center>
        <right><lane id="-1" type="driving" level="false"><width sOffset="0" a="3.25" b="0" c="0" d="0"/></lane></right>
      </laneSection>
    </lanes>
  </road>
  <road name="bend" length="62.831853" id="2" junction="-1">
    <link>
      <predecessor elementType="road" elementId="1" contactPoint="end"/>
    </link>
    <planView>
      <geometry s="0.000000" x="30.000000" y="0.000000" hdg="0.000000" length="62.831853">
        <arc curvature="0.025000"/>
      </geometry>
    </planView>
    <lanes>
      <laneSection s="0">
        <left><lane id="1" type="driving" level="false"><width sOffset="0" a="3.25" b="0" c="0" d="0"/></lane></left>
        <center><lane id="0" type="none" level="false"/></center>
        <right><lane id="-1" type="driving" level="false"><width sOffset="0" a="3.25" b="0" c="0" d="0"/></lane></right>
      </laneSection>
    </lanes>
  </road>
</OpenDRIVE>
"#;

/// Scenario in a layout our template never produces: attributes reordered,
/// no vendor parameters beyond the attempt limit, and an ignored story.
const GOLDEN_XOSC: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<OpenSCENARIO>
  <FileHeader author="hand" description="bend-test" revMinor="1" revMajor="1" date="2023-05-05T10:00:00"/>
  <ParameterDeclarations>
    <ParameterDeclaration name="Unrelated" parameterType="string" value="x"/>
    <ParameterDeclaration name="RoadTest_AttemptLimit" parameterType="unsignedInt" value="2"/>
  </ParameterDeclarations>
  <RoadNetwork>
    <LogicFile filepath="maps/bend.xodr"/>
  </RoadNetwork>
  <Entities>
    <ScenarioObject name="hero">
      <CatalogReference catalogName="VehicleCatalog" entryName="car.small"/>
    </ScenarioObject>
  </Entities>
  <Storyboard>
    <Init>
      <Actions>
        <Private entityRef="hero">
          <PrivateAction>
            <LongitudinalAction>
              <SpeedAction>
                <SpeedActionDynamics dynamicsShape="step" value="0" dynamicsDimension="time"/>
                <SpeedActionTarget><AbsoluteTargetSpeed value="2.5"/></SpeedActionTarget>
              </SpeedAction>
            </LongitudinalAction>
          </PrivateAction>
          <PrivateAction>
            <TeleportAction>
              <Position><LanePosition s="3.0" offset="0" laneId="-1" roadId="1"/></Position>
            </TeleportAction>
          </PrivateAction>
        </Private>
      </Actions>
    </Init>
    <Story name="unused"/>
    <StopTrigger>
      <ConditionGroup>
        <Condition name="arrive" delay="0" conditionEdge="rising">
          <ByEntityCondition>
            <TriggeringEntities triggeringEntitiesRule="any"><EntityRef entityRef="hero"/></TriggeringEntities>
            <EntityCondition>
              <ReachPositionCondition tolerance="1.5">
                <Position><LanePosition roadId="2" laneId="-1" s="55.5" offset="0"/></Position>
              </ReachPositionCondition>
            </EntityCondition>
          </ByEntityCondition>
        </Condition>
      </ConditionGroup>
    </StopTrigger>
  </Storyboard>
</OpenSCENARIO>
"#;

#[test]
fn golden_opendrive_parses_and_drives() {
    let parsed = parse_opendrive(GOLDEN_XODR).unwrap();
    assert_eq!(parsed.name, "hand");
    assert!(parsed.warnings.iter().any(|w| w.contains("elevationProfile")), "{:?}", parsed.warnings);
    let net = &parsed.network;
    assert_eq!(net.roads.len(), 2);
    assert_eq!(net.roads[0].successor, Some(RoadLink::road("2", ContactPoint::Start)));
    assert_eq!(net.roads[1].predecessor, Some(RoadLink::road("1", ContactPoint::End)));
    assert_eq!(net.roads[1].lane_width, 3.25);
    let end = net.roads[1].end_pose();
    assert!((end.x - 70.0).abs() < 1e-5 && (end.y - 40.0).abs() < 1e-5, "{end:?}");
    assert!((end.heading - FRAC_PI_2).abs() < 1e-6);
    let report = validate_network_with(net, PARSED_TOLERANCE);
    assert!(report.is_valid(), "{:?}", report.violations);

    let scenario = parse_xosc(GOLDEN_XOSC).unwrap().config;
    let world = SimWorld::from_network(net.clone()).unwrap();
    let res = run_simulation(&world, &scenario, &VehicleParams::default(), &AdfParams::default(), DEFAULT_DT);
    assert_eq!(res.status, SimStatus::Success, "{:?}", res.failure_detail);
    assert!(res.final_distance().unwrap() <= AdfParams::default().arrival_tol);
}

#[test]
fn golden_openscenario_fields() {
    let parsed = parse_xosc(GOLDEN_XOSC).unwrap();
    let expected = ScenarioConfig {
        scenario_name: "bend-test".into(),
        map_file: "maps/bend.xodr".into(),
        ego: EgoStart { position: LanePosition { road: "1".into(), lane: -1, s: 3.0 }, initial_speed: 2.5 },
        target: LanePosition { road: "2".into(), lane: -1, s: 55.5 },
        vehicle_ref: "car.small".into(),
        attempt_limit: 2,
        timeout: f64::INFINITY,
        arrival_tolerance: 1.5,
    };
    assert_eq!(parsed.config, expected);
    assert_eq!(parsed.warnings.len(), 1);
    assert!(parsed.warnings[0].contains("story"));
}

#[test]
fn openscenario_structure_errors_carry_positions() {
    let no_trigger = GOLDEN_XOSC.replace("ReachPositionCondition", "TimeHeadwayCondition");
    let e = parse_xosc(&no_trigger).unwrap_err().to_string();
    assert!(e.contains("ReachPositionCondition"), "{e}");
    let bad_lane = GOLDEN_XOSC.replace("laneId=\"-1\" roadId=\"1\"", "laneId=\"left\" roadId=\"1\"");
    let e = parse_xosc(&bad_lane).unwrap_err().to_string();
    assert!(e.contains("laneId") && e.contains(':'), "{e}");
}

#[test]
fn emission_is_deterministic_and_schema_clean() {
    for template in Template::ALL {
        let net = template.build(&template.default_params()).unwrap().network;
        let a = emit_opendrive(&net, "t").unwrap();
        let b = emit_opendrive(&net.clone(), "t").unwrap();
        assert_eq!(a, b);
        assert!(check_schema(&a).is_empty(), "{template}: {:?}", check_schema(&a));
        let map = roadtest::lanelet::to_lanelets(&net, 1.0, 0.5).unwrap();
        let origin = GeoOrigin::default();
        assert_eq!(roadtest::lanelet::emit_osm(&map, origin), roadtest::lanelet::emit_osm(&map.clone(), origin));
    }
}

#[test]
fn instantiation_round_trips_every_template() {
    for template in Template::ALL {
        let cs = roadtest::roadgen::instantiate("x-0001", "x", template, &template.default_params(), &template.default_route()).unwrap();
        let mut cfg = ScenarioConfig::for_scenario(&cs, "map.xodr", 4, 95.5);
        cfg.ego.initial_speed = 1.0 / 3.0;
        let xml = instantiate_xosc(&XoscTemplate::builtin(), &cfg, &cs.network).unwrap();
        assert_eq!(parse_xosc(&xml).unwrap().config, cfg);
    }
}

#[test]
fn golden_trajectory_csv() {
    let text = "t,x,y,heading,v,a_long,a_lat,steer,s,lane_dev\n\
                0,0,0,0,0,0,0,0,5,0\n\
                0.01,1e-06,-2.5e-3,0.5,0.01,1,0,-0.1,5.000001,-1.25\n\n";
    let t = parse_csv(text).unwrap();
    assert_eq!(t.len(), 2);
    assert_eq!(t[1].x, 1e-6);
    assert_eq!(t[1].y, -0.0025);
    assert_eq!(t[1].steer, -0.1);
    assert_eq!(t[1].lane_dev, -1.25);
    assert!(parse_csv("t,x\n0,0\n").is_err());
    let e = parse_csv("t,x,y,heading,v,a_long,a_lat,steer,s,lane_dev\n0,0,0\n").unwrap_err();
    assert!(e.to_string().contains("line 2"), "{e}");
}
