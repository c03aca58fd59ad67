//! Serial-chain robot models: links, joints, URDF ingestion and the twist pass.
//!
//! Every moving link carries a body frame at its center of mass. Joint `i`
//! connects link `i − 1` to link `i`; its `offset` is the pose of the child
//! frame in the parent frame at `q = 0` and its screw axis is expressed in the
//! child frame, so the parent-to-child transform is `offset · exp(𝒜ᵢ qᵢ)`.

use std::collections::{HashMap, HashSet};

use nalgebra::{DVector, Matrix3, Vector3, Vector6};
use thiserror::Error;

use crate::spatial::{joint_pose, Pose, ScrewAxis, SpatialError, SpatialInertia, Twist, Wrench};

/// Default gravity (m/s²), base frame z up.
pub const STANDARD_GRAVITY: [f64; 3] = [0.0, 0.0, -9.81];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RobotError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("unsupported joint type `{kind}` on joint `{joint}`")]
    UnsupportedJointType { joint: String, kind: String },
    #[error("robot is not a single serial chain: {0}")]
    BranchingChain(String),
    #[error("robot has no moving joints")]
    EmptyChain,
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub name: String,
    pub inertia: SpatialInertia,
    /// Pose of the center-of-mass body frame in the URDF link frame.
    pub com_frame: Pose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointKind {
    Revolute,
    Prismatic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub name: String,
    pub kind: JointKind,
    pub axis: ScrewAxis,
    pub offset: Pose,
    pub lower_limit: f64,
    pub upper_limit: f64,
    pub velocity_limit: f64,
    pub effort_limit: f64,
}

impl Joint {
    /// Pose of the child frame in the parent frame.
    pub fn parent_to_child(&self, q: f64) -> Pose {
        joint_pose(&self.axis, q, &self.offset)
    }

    pub fn has_finite_limits(&self) -> bool {
        self.lower_limit.is_finite() && self.upper_limit.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    pub name: String,
    /// `links[0]` is the fixed base; `links[i]` is moved by `joints[i − 1]`.
    pub links: Vec<Link>,
    pub joints: Vec<Joint>,
    /// `V̇₀`, which carries gravity (see [`gravity_base_acceleration`]).
    pub base_acceleration: Twist,
    pub tool_wrench: Wrench,
    /// Pose of the tool frame in the last link's body frame.
    pub tool_offset: Pose,
}

impl RobotModel {
    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    /// 1-based joint access, matching the `i` of the dynamics equations.
    pub fn joint(&self, i: usize) -> &Joint {
        &self.joints[i - 1]
    }

    /// Inertia of moving link `i` (1-based).
    pub fn inertia(&self, i: usize) -> &SpatialInertia {
        &self.links[i].inertia
    }

    pub fn with_gravity(mut self, g: Vector3<f64>) -> Self {
        self.base_acceleration = gravity_base_acceleration(&g);
        self
    }

    pub fn with_tool_wrench(mut self, w: Wrench) -> Self {
        self.tool_wrench = w;
        self
    }

    pub fn validate(&self) -> Result<(), RobotError> {
        if self.joints.is_empty() {
            return Err(RobotError::EmptyChain);
        }
        if self.links.len() != self.joints.len() + 1 {
            return Err(RobotError::Invalid(format!(
                "{} links for {} joints",
                self.links.len(),
                self.joints.len()
            )));
        }
        for j in &self.joints {
            if !(j.lower_limit < j.upper_limit) {
                return Err(RobotError::Invalid(format!(
                    "joint `{}` has lower limit {} not below upper limit {}",
                    j.name, j.lower_limit, j.upper_limit
                )));
            }
        }
        if !self.base_acceleration.is_finite() || !self.tool_wrench.is_finite() {
            return Err(RobotError::Invalid("non-finite boundary values".into()));
        }
        Ok(())
    }

    pub fn from_chain_spec(spec: &ChainSpec) -> Result<Self, RobotError> {
        build_model(spec)
    }
}

/// Joint quantities for one configuration with known/unknown flags on `qdd` and `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub q: DVector<f64>,
    pub qd: DVector<f64>,
    pub qdd: DVector<f64>,
    pub tau: DVector<f64>,
    pub qdd_known: Vec<bool>,
    pub tau_known: Vec<bool>,
}

impl JointState {
    /// Inverse-dynamics state: accelerations known, torques unknown.
    pub fn inverse(q: DVector<f64>, qd: DVector<f64>, qdd: DVector<f64>) -> Self {
        let n = q.len();
        Self {
            q,
            qd,
            qdd,
            tau: DVector::zeros(n),
            qdd_known: vec![true; n],
            tau_known: vec![false; n],
        }
    }

    /// Forward-dynamics state: torques known, accelerations unknown.
    pub fn forward(q: DVector<f64>, qd: DVector<f64>, tau: DVector<f64>) -> Self {
        let n = q.len();
        Self {
            q,
            qd,
            qdd: DVector::zeros(n),
            tau,
            qdd_known: vec![false; n],
            tau_known: vec![true; n],
        }
    }

    /// Mixed state; `accel_known[i]` selects whether joint `i + 1` has its
    /// acceleration (otherwise its torque) given. Unknown entries are zeroed.
    pub fn hybrid(
        q: DVector<f64>,
        qd: DVector<f64>,
        qdd: DVector<f64>,
        tau: DVector<f64>,
        accel_known: &[bool],
    ) -> Self {
        let mut qdd = qdd;
        let mut tau = tau;
        for (i, &a) in accel_known.iter().enumerate() {
            if a {
                tau[i] = 0.0;
            } else {
                qdd[i] = 0.0;
            }
        }
        Self {
            q,
            qd,
            qdd,
            tau,
            qdd_known: accel_known.to_vec(),
            tau_known: accel_known.iter().map(|a| !a).collect(),
        }
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }

    pub fn check(&self, n: usize) -> Result<(), RobotError> {
        let lens = [self.q.len(), self.qd.len(), self.qdd.len(), self.tau.len()];
        if lens.iter().any(|&l| l != n) || self.qdd_known.len() != n || self.tau_known.len() != n {
            return Err(RobotError::Invalid(format!(
                "joint state sizes {lens:?} do not match {n} joints"
            )));
        }
        let finite = self
            .q
            .iter()
            .chain(self.qd.iter())
            .chain(self.qdd.iter())
            .chain(self.tau.iter())
            .all(|x| x.is_finite());
        if !finite {
            return Err(RobotError::Invalid("non-finite joint state".into()));
        }
        Ok(())
    }
}

/// `V̇₀ = (0, 0, 0, −g)`: accelerating the base upward by `−g` stands in for gravity.
pub fn gravity_base_acceleration(g: &Vector3<f64>) -> Twist {
    Twist::new(Vector3::zeros(), -g)
}

/// Link twists `𝒱₁..𝒱ₙ` by the forward recursion from `𝒱₀ = 0`.
pub fn compute_twists(model: &RobotModel, q: &DVector<f64>, qd: &DVector<f64>) -> Vec<Twist> {
    let mut out = Vec::with_capacity(model.dof());
    let mut prev = Vector6::zeros();
    for (i, joint) in model.joints.iter().enumerate() {
        let t_child_parent = joint.parent_to_child(q[i]).inverse();
        let v = t_child_parent.adjoint() * prev + joint.axis.vector() * qd[i];
        out.push(Twist(v));
        prev = v;
    }
    out
}

// ---------------------------------------------------------------------------
// Chain description shared by the URDF reader and the programmatic builders.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecJointKind {
    Revolute,
    Continuous,
    Prismatic,
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub name: String,
    pub mass: f64,
    /// Inertial origin: pose of the COM frame in the link frame.
    pub com: Pose,
    /// Rotational inertia about the COM, in the COM frame.
    pub inertia: Matrix3<f64>,
}

impl LinkSpec {
    pub fn massless(name: &str) -> Self {
        Self {
            name: name.to_string(),
            mass: 0.0,
            com: Pose::identity(),
            inertia: Matrix3::zeros(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    pub name: String,
    pub kind: SpecJointKind,
    pub parent: String,
    pub child: String,
    /// Pose of the child link frame in the parent link frame at `q = 0`.
    pub origin: Pose,
    /// Axis direction in the child link frame.
    pub axis: Vector3<f64>,
    pub lower: f64,
    pub upper: f64,
    pub velocity: f64,
    pub effort: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChainSpec {
    pub name: String,
    pub links: Vec<LinkSpec>,
    pub joints: Vec<JointSpec>,
}

fn build_model(spec: &ChainSpec) -> Result<RobotModel, RobotError> {
    let links: HashMap<&str, &LinkSpec> = spec.links.iter().map(|l| (l.name.as_str(), l)).collect();
    if links.len() != spec.links.len() {
        return Err(RobotError::Invalid("duplicate link names".into()));
    }
    let mut by_parent: HashMap<&str, &JointSpec> = HashMap::new();
    let mut children: HashSet<&str> = HashSet::new();
    for j in &spec.joints {
        for end in [&j.parent, &j.child] {
            if !links.contains_key(end.as_str()) {
                return Err(RobotError::Invalid(format!(
                    "joint `{}` references unknown link `{end}`",
                    j.name
                )));
            }
        }
        if !children.insert(j.child.as_str()) {
            return Err(RobotError::UnsupportedJointType {
                joint: j.name.clone(),
                kind: "loop closure".into(),
            });
        }
        if by_parent.insert(j.parent.as_str(), j).is_some() {
            return Err(RobotError::BranchingChain(format!(
                "link `{}` has several child joints",
                j.parent
            )));
        }
    }
    let roots: Vec<&LinkSpec> = spec
        .links
        .iter()
        .filter(|l| !children.contains(l.name.as_str()))
        .collect();
    let root = match roots.as_slice() {
        [root] => *root,
        [] => {
            return Err(RobotError::UnsupportedJointType {
                joint: String::new(),
                kind: "kinematic loop".into(),
            })
        }
        _ => {
            return Err(RobotError::BranchingChain(format!(
                "{} disconnected root links",
                roots.len()
            )))
        }
    };

    let mut out_links = vec![Link {
        name: root.name.clone(),
        inertia: SpatialInertia::point_mass(1.0)?,
        com_frame: Pose::identity(),
    }];
    let mut joints = Vec::new();
    // Pose of the current URDF link frame in the current body frame (the base
    // frame or the last moving link's COM frame).
    let mut acc = Pose::identity();
    let mut current = root.name.as_str();
    let mut visited = 1;
    while let Some(j) = by_parent.get(current) {
        visited += 1;
        let child = links[j.child.as_str()];
        match j.kind {
            SpecJointKind::Fixed => {
                acc = acc.compose(&j.origin);
                if child.mass > 0.0 && !joints.is_empty() {
                    let g = SpatialInertia::at_com(child.mass, child.inertia)?;
                    // g is expressed in the child's COM frame; move it into the body frame.
                    let t_com_body = acc.compose(&child.com).inverse();
                    let last = out_links.last_mut().expect("base present");
                    last.inertia = last.inertia.add(&g.transformed(&t_com_body));
                }
            }
            kind => {
                if !(child.mass > 0.0) {
                    return Err(RobotError::Invalid(format!(
                        "moving link `{}` needs a positive mass",
                        child.name
                    )));
                }
                let axis_in_joint = match kind {
                    SpecJointKind::Prismatic => ScrewAxis::prismatic(j.axis)?,
                    _ => ScrewAxis::revolute(j.axis, Vector3::zeros())?,
                };
                // Express the joint screw in the child's COM frame.
                let axis = axis_in_joint.transformed(&child.com.inverse());
                let axis = ScrewAxis::from_vector(*axis.vector(), axis.kind()).unwrap_or(axis);
                let offset = acc.compose(&j.origin).compose(&child.com);
                let (lower, upper) = match kind {
                    SpecJointKind::Continuous => (f64::NEG_INFINITY, f64::INFINITY),
                    _ => (j.lower, j.upper),
                };
                joints.push(Joint {
                    name: j.name.clone(),
                    kind: if kind == SpecJointKind::Prismatic {
                        JointKind::Prismatic
                    } else {
                        JointKind::Revolute
                    },
                    axis,
                    offset,
                    lower_limit: lower,
                    upper_limit: upper,
                    velocity_limit: j.velocity,
                    effort_limit: j.effort,
                });
                out_links.push(Link {
                    name: child.name.clone(),
                    inertia: SpatialInertia::at_com(child.mass, child.inertia)?,
                    com_frame: child.com,
                });
                acc = child.com.inverse();
            }
        }
        current = child.name.as_str();
    }
    if visited != spec.links.len() {
        return Err(RobotError::BranchingChain("links not reachable from the root".into()));
    }
    let model = RobotModel {
        name: spec.name.clone(),
        links: out_links,
        joints,
        base_acceleration: gravity_base_acceleration(&Vector3::from(STANDARD_GRAVITY)),
        tool_wrench: Wrench::zero(),
        tool_offset: Pose::identity(),
    };
    model.validate()?;
    Ok(model)
}

// ---------------------------------------------------------------------------
// URDF subset.

/// Parses a URDF document. Unknown elements are reported through `log::warn!`;
/// use [`parse_urdf`] to collect them instead.
pub fn load_urdf(text: &str) -> Result<RobotModel, RobotError> {
    let (spec, warnings) = parse_urdf(text)?;
    for w in &warnings {
        log::warn!("{w}");
    }
    RobotModel::from_chain_spec(&spec)
}

/// Parses the supported URDF subset into a [`ChainSpec`] plus warnings about
/// ignored elements.
pub fn parse_urdf(text: &str) -> Result<(ChainSpec, Vec<String>), RobotError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| RobotError::MalformedXml(e.to_string()))?;
    let robot = doc.root_element();
    if robot.tag_name().name() != "robot" {
        return Err(RobotError::MalformedXml(format!(
            "root element is <{}>, expected <robot>",
            robot.tag_name().name()
        )));
    }
    let mut spec = ChainSpec {
        name: robot.attribute("name").unwrap_or("robot").to_string(),
        ..Default::default()
    };
    let mut warnings = Vec::new();
    for node in robot.children().filter(|n| n.is_element()) {
        match node.tag_name().name() {
            "link" => spec.links.push(parse_link(node, &mut warnings)?),
            "joint" => spec.joints.push(parse_joint(node, &mut warnings)?),
            other => warnings.push(format!("ignoring <{other}> element")),
        }
    }
    Ok((spec, warnings))
}

fn required_attr<'a>(node: roxmltree::Node<'a, '_>, name: &str) -> Result<&'a str, RobotError> {
    node.attribute(name)
        .ok_or_else(|| RobotError::MalformedXml(format!("<{}> is missing attribute `{name}`", node.tag_name().name())))
}

fn parse_f64(s: &str, what: &str) -> Result<f64, RobotError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| RobotError::MalformedXml(format!("{what}: cannot parse `{s}` as a number")))?;
    if v.is_nan() {
        return Err(RobotError::MalformedXml(format!("{what}: NaN")));
    }
    Ok(v)
}

fn parse_vec3(s: &str, what: &str) -> Result<Vector3<f64>, RobotError> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(RobotError::MalformedXml(format!(
            "{what}: expected 3 numbers, got `{s}`"
        )));
    }
    let v = Vector3::new(
        parse_f64(parts[0], what)?,
        parse_f64(parts[1], what)?,
        parse_f64(parts[2], what)?,
    );
    if v.iter().any(|x| !x.is_finite()) {
        return Err(RobotError::MalformedXml(format!("{what}: non-finite entry")));
    }
    Ok(v)
}

fn parse_origin(node: Option<roxmltree::Node<'_, '_>>) -> Result<Pose, RobotError> {
    let Some(node) = node else {
        return Ok(Pose::identity());
    };
    let xyz = node.attribute("xyz").map(|s| parse_vec3(s, "origin xyz")).transpose()?;
    let rpy = node.attribute("rpy").map(|s| parse_vec3(s, "origin rpy")).transpose()?;
    Ok(Pose::from_xyz_rpy(
        xyz.unwrap_or_else(Vector3::zeros),
        rpy.unwrap_or_else(Vector3::zeros),
    ))
}

fn child<'a, 'i>(node: roxmltree::Node<'a, 'i>, tag: &str) -> Option<roxmltree::Node<'a, 'i>> {
    node.children().find(|c| c.is_element() && c.tag_name().name() == tag)
}

fn parse_link(node: roxmltree::Node<'_, '_>, warnings: &mut Vec<String>) -> Result<LinkSpec, RobotError> {
    let name = required_attr(node, "name")?;
    let mut link = LinkSpec::massless(name);
    for c in node.children().filter(|c| c.is_element()) {
        match c.tag_name().name() {
            "inertial" => {
                link.com = parse_origin(child(c, "origin"))?;
                if let Some(m) = child(c, "mass") {
                    link.mass = parse_f64(required_attr(m, "value")?, "mass")?;
                    if !(link.mass >= 0.0) || !link.mass.is_finite() {
                        return Err(RobotError::Invalid(format!("link `{name}` has mass {}", link.mass)));
                    }
                }
                if let Some(i) = child(c, "inertia") {
                    let get = |k: &str| -> Result<f64, RobotError> {
                        let v = i.attribute(k).map(|s| parse_f64(s, k)).transpose()?.unwrap_or(0.0);
                        if v.is_finite() {
                            Ok(v)
                        } else {
                            Err(RobotError::MalformedXml(format!("inertia {k} is not finite")))
                        }
                    };
                    let (ixx, ixy, ixz, iyy, iyz, izz) = (
                        get("ixx")?,
                        get("ixy")?,
                        get("ixz")?,
                        get("iyy")?,
                        get("iyz")?,
                        get("izz")?,
                    );
                    link.inertia = Matrix3::new(ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz);
                }
            }
            "visual" | "collision" => {}
            other => warnings.push(format!("link `{name}`: ignoring <{other}>")),
        }
    }
    Ok(link)
}

fn parse_joint(node: roxmltree::Node<'_, '_>, warnings: &mut Vec<String>) -> Result<JointSpec, RobotError> {
    let name = required_attr(node, "name")?.to_string();
    let ty = required_attr(node, "type")?;
    let kind = match ty {
        "revolute" => SpecJointKind::Revolute,
        "continuous" => SpecJointKind::Continuous,
        "prismatic" => SpecJointKind::Prismatic,
        "fixed" => SpecJointKind::Fixed,
        other => {
            return Err(RobotError::UnsupportedJointType {
                joint: name,
                kind: other.to_string(),
            })
        }
    };
    let mut parent = None;
    let mut child_link = None;
    let mut origin = Pose::identity();
    let mut axis = Vector3::x();
    let (mut lower, mut upper) = (f64::NEG_INFINITY, f64::INFINITY);
    let (mut velocity, mut effort) = (f64::INFINITY, f64::INFINITY);
    let mut has_limit = false;
    for c in node.children().filter(|c| c.is_element()) {
        match c.tag_name().name() {
            "parent" => parent = Some(required_attr(c, "link")?.to_string()),
            "child" => child_link = Some(required_attr(c, "link")?.to_string()),
            "origin" => origin = parse_origin(Some(c))?,
            "axis" => {
                axis = parse_vec3(required_attr(c, "xyz")?, "axis xyz")?;
                if axis.norm() == 0.0 {
                    return Err(RobotError::Invalid(format!("joint `{name}` has a zero axis")));
                }
            }
            "limit" => {
                has_limit = true;
                let get = |k: &str| c.attribute(k).map(|s| parse_f64(s, k)).transpose();
                lower = get("lower")?.unwrap_or(0.0);
                upper = get("upper")?.unwrap_or(0.0);
                velocity = get("velocity")?.unwrap_or(f64::INFINITY);
                effort = get("effort")?.unwrap_or(f64::INFINITY);
            }
            other => warnings.push(format!("joint `{name}`: ignoring <{other}>")),
        }
    }
    if matches!(kind, SpecJointKind::Revolute | SpecJointKind::Prismatic) {
        if !has_limit {
            return Err(RobotError::Invalid(format!(
                "joint `{name}` of type {ty} needs <limit>"
            )));
        }
        if !(lower < upper) {
            return Err(RobotError::Invalid(format!(
                "joint `{name}` limits [{lower}, {upper}] are empty"
            )));
        }
    }
    Ok(JointSpec {
        parent: parent.ok_or_else(|| RobotError::MalformedXml(format!("joint `{name}` has no <parent>")))?,
        child: child_link.ok_or_else(|| RobotError::MalformedXml(format!("joint `{name}` has no <child>")))?,
        name,
        kind,
        origin,
        axis,
        lower,
        upper,
        velocity,
        effort,
    })
}

/// Renders a [`ChainSpec`] as URDF (the supported subset only).
pub fn chain_spec_to_urdf(spec: &ChainSpec) -> String {
    fn origin(p: &Pose) -> String {
        let t = p.translation();
        // rpy from R = Rz(y)Ry(p)Rx(r)
        let r = p.rotation();
        let pitch = (-r[(2, 0)]).clamp(-1.0, 1.0).asin();
        let (roll, yaw) = if pitch.cos().abs() > 1e-12 {
            (r[(2, 1)].atan2(r[(2, 2)]), r[(1, 0)].atan2(r[(0, 0)]))
        } else {
            ((-r[(1, 2)]).atan2(r[(1, 1)]), 0.0)
        };
        format!(
            "<origin xyz=\"{} {} {}\" rpy=\"{} {} {}\"/>",
            t.x, t.y, t.z, roll, pitch, yaw
        )
    }
    let mut s = format!("<robot name=\"{}\">\n", spec.name);
    for l in &spec.links {
        s.push_str(&format!("  <link name=\"{}\">\n", l.name));
        if l.mass > 0.0 {
            let i = &l.inertia;
            s.push_str(&format!(
                "    <inertial>\n      {}\n      <mass value=\"{}\"/>\n      <inertia ixx=\"{}\" ixy=\"{}\" ixz=\"{}\" iyy=\"{}\" iyz=\"{}\" izz=\"{}\"/>\n    </inertial>\n",
                origin(&l.com),
                l.mass,
                i[(0, 0)],
                i[(0, 1)],
                i[(0, 2)],
                i[(1, 1)],
                i[(1, 2)],
                i[(2, 2)]
            ));
        }
        s.push_str("  </link>\n");
    }
    for j in &spec.joints {
        let ty = match j.kind {
            SpecJointKind::Revolute => "revolute",
            SpecJointKind::Continuous => "continuous",
            SpecJointKind::Prismatic => "prismatic",
            SpecJointKind::Fixed => "fixed",
        };
        s.push_str(&format!(
            "  <joint name=\"{}\" type=\"{ty}\">\n    <parent link=\"{}\"/>\n    <child link=\"{}\"/>\n    {}\n    <axis xyz=\"{} {} {}\"/>\n",
            j.name,
            j.parent,
            j.child,
            origin(&j.origin),
            j.axis.x,
            j.axis.y,
            j.axis.z
        ));
        if matches!(j.kind, SpecJointKind::Revolute | SpecJointKind::Prismatic) {
            s.push_str(&format!(
                "    <limit lower=\"{}\" upper=\"{}\" velocity=\"{}\" effort=\"{}\"/>\n",
                j.lower, j.upper, j.velocity, j.effort
            ));
        }
        s.push_str("  </joint>\n");
    }
    s.push_str("</robot>\n");
    s
}

/// Canonical robots used by the tests, the benchmark harness and the planner.
pub mod models {
    use super::*;
    use std::f64::consts::PI;

    fn revolute(name: &str, parent: &str, child: &str, origin: Pose, axis: Vector3<f64>) -> JointSpec {
        JointSpec {
            name: name.into(),
            kind: SpecJointKind::Revolute,
            parent: parent.into(),
            child: child.into(),
            origin,
            axis,
            lower: -PI,
            upper: PI,
            velocity: 10.0,
            effort: 100.0,
        }
    }

    /// Planar point-mass pendulum swinging in the x–z plane about −y, so that
    /// `q = 0` is horizontal and positive `q` lifts the mass against gravity `−z`.
    pub fn pendulum_spec(mass: f64, length: f64) -> ChainSpec {
        ChainSpec {
            name: "pendulum".into(),
            links: vec![
                LinkSpec::massless("base"),
                LinkSpec {
                    name: "bob".into(),
                    mass,
                    com: Pose::from_translation(Vector3::new(length, 0.0, 0.0)),
                    inertia: Matrix3::zeros(),
                },
            ],
            joints: vec![revolute("j1", "base", "bob", Pose::identity(), -Vector3::y())],
        }
    }

    pub fn pendulum(mass: f64, length: f64) -> RobotModel {
        RobotModel::from_chain_spec(&pendulum_spec(mass, length)).expect("valid pendulum")
    }

    /// `n` unit rods (mass 1 kg, length 1 m, COM at the midpoint) rotating about
    /// z in the x–y plane. Joint `i + 1` sits at the tip of rod `i`.
    pub fn planar_chain_spec(n: usize) -> ChainSpec {
        let mut links = vec![LinkSpec::massless("base")];
        let mut joints = Vec::new();
        for i in 1..=n {
            let name = format!("link{i}");
            links.push(LinkSpec {
                name: name.clone(),
                mass: 1.0,
                com: Pose::from_translation(Vector3::new(0.5, 0.0, 0.0)),
                inertia: Matrix3::from_diagonal(&Vector3::new(1e-3, 1.0 / 12.0, 1.0 / 12.0)),
            });
            let parent = if i == 1 {
                "base".to_string()
            } else {
                format!("link{}", i - 1)
            };
            let origin = if i == 1 {
                Pose::identity()
            } else {
                Pose::from_translation(Vector3::new(1.0, 0.0, 0.0))
            };
            joints.push(revolute(&format!("j{i}"), &parent, &name, origin, Vector3::z()));
        }
        ChainSpec {
            name: format!("planar{n}r"),
            links,
            joints,
        }
    }

    pub fn planar_chain(n: usize) -> RobotModel {
        RobotModel::from_chain_spec(&planar_chain_spec(n)).expect("valid planar chain")
    }

    /// Spatial 6R arm with PUMA-560-like axis layout and link masses.
    pub fn puma_like_spec() -> ChainSpec {
        let masses = [10.0, 17.4, 4.8, 0.82, 0.34, 0.09];
        let coms = [
            Vector3::new(0.0, 0.0, 0.1),
            Vector3::new(0.068, 0.006, -0.016),
            Vector3::new(0.0, -0.07, 0.014),
            Vector3::new(0.0, 0.0, -0.019),
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(0.0, 0.0, 0.032),
        ];
        let inertias = [
            Vector3::new(0.35, 0.35, 0.35),
            Vector3::new(0.13, 0.524, 0.539),
            Vector3::new(0.066, 0.086, 0.0125),
            Vector3::new(1.8e-3, 1.3e-3, 1.8e-3),
            Vector3::new(0.3e-3, 0.4e-3, 0.3e-3),
            Vector3::new(0.15e-3, 0.15e-3, 0.04e-3),
        ];
        let origins = [
            Pose::from_translation(Vector3::new(0.0, 0.0, 0.6)),
            Pose::from_xyz_rpy(Vector3::new(0.0, 0.0, 0.0), Vector3::new(-PI / 2.0, 0.0, 0.0)),
            Pose::from_xyz_rpy(Vector3::new(0.4318, 0.0, 0.1501), Vector3::zeros()),
            Pose::from_xyz_rpy(Vector3::new(-0.0203, -0.4318, 0.0), Vector3::new(PI / 2.0, 0.0, 0.0)),
            Pose::from_xyz_rpy(Vector3::zeros(), Vector3::new(-PI / 2.0, 0.0, 0.0)),
            Pose::from_xyz_rpy(Vector3::zeros(), Vector3::new(PI / 2.0, 0.0, 0.0)),
        ];
        let mut links = vec![LinkSpec::massless("base")];
        let mut joints = Vec::new();
        for i in 0..6 {
            let name = format!("link{}", i + 1);
            links.push(LinkSpec {
                name: name.clone(),
                mass: masses[i],
                com: Pose::from_translation(coms[i]),
                inertia: Matrix3::from_diagonal(&inertias[i]),
            });
            let parent = if i == 0 { "base".to_string() } else { format!("link{i}") };
            joints.push(revolute(
                &format!("j{}", i + 1),
                &parent,
                &name,
                origins[i],
                Vector3::z(),
            ));
        }
        ChainSpec {
            name: "puma6r".into(),
            links,
            joints,
        }
    }

    pub fn puma_like() -> RobotModel {
        RobotModel::from_chain_spec(&puma_like_spec()).expect("valid 6R arm")
    }

    /// Cart on a prismatic x-rail with an unactuated pole hinged about −y.
    /// The pole hangs down at `θ = 0` and is upright at `θ = π`; its mass is a
    /// point at distance `length` from the hinge.
    pub fn cart_pole_spec(cart_mass: f64, pole_mass: f64, length: f64) -> ChainSpec {
        ChainSpec {
            name: "cart_pole".into(),
            links: vec![
                LinkSpec::massless("rail"),
                LinkSpec {
                    name: "cart".into(),
                    mass: cart_mass,
                    com: Pose::identity(),
                    inertia: Matrix3::from_diagonal(&Vector3::new(0.01, 0.01, 0.01)),
                },
                LinkSpec {
                    name: "pole".into(),
                    mass: pole_mass,
                    com: Pose::from_translation(Vector3::new(0.0, 0.0, -length)),
                    inertia: Matrix3::zeros(),
                },
            ],
            joints: vec![
                JointSpec {
                    name: "slider".into(),
                    kind: SpecJointKind::Prismatic,
                    parent: "rail".into(),
                    child: "cart".into(),
                    origin: Pose::identity(),
                    axis: Vector3::x(),
                    lower: -5.0,
                    upper: 5.0,
                    velocity: 10.0,
                    effort: 100.0,
                },
                JointSpec {
                    name: "hinge".into(),
                    kind: SpecJointKind::Continuous,
                    parent: "cart".into(),
                    child: "pole".into(),
                    origin: Pose::identity(),
                    axis: -Vector3::y(),
                    lower: f64::NEG_INFINITY,
                    upper: f64::INFINITY,
                    velocity: f64::INFINITY,
                    effort: f64::INFINITY,
                },
            ],
        }
    }

    pub fn cart_pole(cart_mass: f64, pole_mass: f64, length: f64) -> RobotModel {
        RobotModel::from_chain_spec(&cart_pole_spec(cart_mass, pole_mass, length)).expect("valid cart-pole")
    }
}
